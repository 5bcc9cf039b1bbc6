"""LBG vector quantization.

A codebook starts as the centroid of all training vectors and is doubled by
multiplicative splitting ``c*(1+eps)``, ``c*(1-eps)``; after every split a run
of Lloyd iterations (nearest-codeword assignment, centroid update) refines it.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._kernels import cluster_sums, nearest_codeword
from .errors import ConfigError, DimensionMismatchError, EmptyInputError

# split copies closer than this are treated as a split at the origin
_SPLIT_ATOL = 1e-12


@dataclass(frozen=True)
class LbgConfig:
    target_size: int = 8
    epsilon: float = 0.01
    rel_distortion_tol: float = 1e-3
    max_lloyd_iters: int = 100

    def __post_init__(self):
        t = self.target_size
        if t < 1 or t & (t - 1):
            raise ConfigError("target_size must be a power of two >= 1")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError("epsilon must lie in (0, 1)")
        if not self.rel_distortion_tol > 0:
            raise ConfigError("rel_distortion_tol must be positive")
        if self.max_lloyd_iters < 1:
            raise ConfigError("max_lloyd_iters must be >= 1")


@dataclass(frozen=True, eq=False)
class Codebook:
    codewords: np.ndarray

    def __post_init__(self):
        cw = np.array(self.codewords, dtype=np.float64)
        if cw.ndim != 2 or cw.shape[0] < 1 or cw.shape[1] < 1:
            raise ValueError("codewords must be a non-empty 2-D matrix")
        if not np.all(np.isfinite(cw)):
            raise ValueError("codewords must be finite")
        cw.setflags(write=False)
        object.__setattr__(self, "codewords", cw)

    @property
    def size(self):
        return self.codewords.shape[0]

    @property
    def dim(self):
        return self.codewords.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Codebook):
            return NotImplemented
        return np.array_equal(self.codewords, other.codewords)


@dataclass(frozen=True)
class TraceRecord:
    stage: int
    size: int
    iteration: int
    distortion: float
    codewords: np.ndarray


@dataclass
class LbgTrace:
    """Every recorded Lloyd iteration of an LBG run, in order."""

    records: list = field(default_factory=list)

    def add(self, stage, iteration, distortion, codewords):
        self.records.append(
            TraceRecord(stage, codewords.shape[0], iteration, float(distortion), codewords.copy())
        )

    def sizes(self):
        out = []
        for r in self.records:
            if not out or out[-1] != r.size:
                out.append(r.size)
        return out

    def stage_final(self):
        """Last codeword snapshot of each stage, keyed by stage number."""
        return {r.stage: r.codewords for r in self.records}

    def to_csv(self, path):
        lines = ["stage,size,iter,distortion"]
        lines += [f"{r.stage},{r.size},{r.iteration},{r.distortion:.17g}" for r in self.records]
        Path(path).write_text("\n".join(lines) + "\n")

    def write_snapshots(self, directory, stem="stage"):
        """Write ``<stem><k>.csv`` per stage with that stage's final codewords."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for stage, cw in self.stage_final().items():
            header = "stage,codeword_index," + ",".join(f"c{d + 1}" for d in range(cw.shape[1]))
            lines = [header]
            for j, row in enumerate(cw):
                lines.append(f"{stage},{j}," + ",".join(f"{v:.17g}" for v in row))
            p = directory / f"{stem}{stage}.csv"
            p.write_text("\n".join(lines) + "\n")
            paths.append(p)
        return paths


def _as_vectors(vectors):
    v = np.asarray(vectors, dtype=np.float64)
    if v.size == 0:
        raise EmptyInputError("no training vectors")
    if v.ndim != 2:
        raise DimensionMismatchError("vectors must form a 2-D array of uniform dimension")
    return np.ascontiguousarray(v)


def split_codebook(codewords, epsilon):
    """Replace each codeword by the pair ``c*(1+eps)``, ``c*(1-eps)`` (interleaved)."""
    cw = np.asarray(codewords, dtype=np.float64)
    plus = cw * (1.0 + epsilon)
    minus = cw * (1.0 - epsilon)
    degenerate = np.all(np.abs(plus - minus) <= _SPLIT_ATOL, axis=1)
    minus[degenerate] += epsilon
    out = np.empty((2 * cw.shape[0], cw.shape[1]))
    out[0::2] = plus
    out[1::2] = minus
    return out


def centroid_update(vectors, labels, sqdist, codewords):
    """Move each codeword to its cluster centroid.

    An empty cluster's codeword is replaced by the training vector that is
    currently farthest from its nearest codeword.
    """
    size = codewords.shape[0]
    sums, counts = cluster_sums(vectors, labels, size)
    new = codewords.copy()
    filled = counts > 0
    new[filled] = sums[filled] / counts[filled, None]
    empty = np.flatnonzero(~filled)
    if empty.size:
        far = sqdist.copy()
        for k in empty:
            i = int(np.argmax(far))
            new[k] = vectors[i]
            diff = vectors - new[k]
            np.minimum(far, np.einsum("ij,ij->i", diff, diff), out=far)
    return new


def lloyd(vectors, codewords, rel_tol, max_iters):
    """Yield ``(iteration, codewords, distortion)`` for a run of Lloyd steps.

    Iteration 0 is the starting codebook. Distortion is the mean squared
    Euclidean distance to the nearest codeword. The run stops once the
    relative improvement drops below ``rel_tol`` or after ``max_iters`` steps.
    """
    vectors = _as_vectors(vectors)
    cw = np.array(codewords, dtype=np.float64)
    labels, sq = nearest_codeword(vectors, cw)
    dist = float(sq.mean())
    yield 0, cw, dist
    for it in range(1, max_iters + 1):
        cw = centroid_update(vectors, labels, sq, cw)
        labels, sq = nearest_codeword(vectors, cw)
        new_dist = float(sq.mean())
        yield it, cw, new_dist
        if dist == 0.0 or (dist - new_dist) / dist < rel_tol:
            break
        dist = new_dist


def train_codebook(vectors, config=LbgConfig()):
    """Train an LBG codebook; returns ``(Codebook, LbgTrace)``.

    Doubling stops early when there are fewer distinct vectors than the next
    codebook size would need.
    """
    vectors = _as_vectors(vectors)
    if not np.all(np.isfinite(vectors)):
        raise ValueError("training vectors must be finite")
    n_distinct = np.unique(vectors, axis=0).shape[0]
    trace = LbgTrace()

    cw = vectors.mean(axis=0, keepdims=True)
    _, sq = nearest_codeword(vectors, cw)
    trace.add(0, 0, sq.mean(), cw)

    stage = 0
    while cw.shape[0] < config.target_size and 2 * cw.shape[0] <= n_distinct:
        stage += 1
        start = split_codebook(cw, config.epsilon)
        for it, cw, dist in lloyd(vectors, start, config.rel_distortion_tol, config.max_lloyd_iters):
            trace.add(stage, it, dist, cw)
    return Codebook(cw), trace


def _check_dim(vectors, cb):
    if vectors.shape[-1] != cb.dim:
        raise DimensionMismatchError(
            f"vector dimension {vectors.shape[-1]} does not match codebook dimension {cb.dim}"
        )


def quantize(v, cb):
    """Nearest codeword index (lowest on ties) and its Euclidean distance."""
    v = np.asarray(v, dtype=np.float64).reshape(1, -1)
    _check_dim(v, cb)
    idx, sq = nearest_codeword(v, cb.codewords)
    return int(idx[0]), float(np.sqrt(sq[0]))


def avg_distortion(vectors, cb):
    """Mean Euclidean (not squared) distance from each vector to ``cb``."""
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.size == 0:
        raise EmptyInputError("no vectors to score")
    vectors = np.atleast_2d(vectors)
    _check_dim(vectors, cb)
    _, sq = nearest_codeword(vectors, cb.codewords)
    return float(np.sqrt(sq).mean())
