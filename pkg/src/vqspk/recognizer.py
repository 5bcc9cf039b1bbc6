"""Speaker enrollment, identification and database persistence."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import math
import os
from pathlib import Path
import re

import numpy as np

from .audio import read_wav
from .errors import (
    ConfigError,
    ConfigMismatchError,
    DimensionMismatchError,
    DuplicateIdError,
    EmptyInputError,
    FormatError,
    IoFailure,
)
from .mfcc import MfccConfig, extract_mfcc
from .vq import Codebook, LbgConfig, avg_distortion, train_codebook

DB_MAGIC = "VQSPKDB 1"


def max_workers():
    """Thread cap from ``VQSPK_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("VQSPK_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"VQSPK_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError("VQSPK_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def parallel_map(fn, items):
    """``[fn(x) for x in items]``, spread over worker threads, order preserved."""
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class SpeakerModel:
    id: str
    codebook: Codebook

    def __post_init__(self):
        if not self.id or any(ch.isspace() for ch in self.id):
            raise ValueError(f"speaker id must be non-empty without whitespace: {self.id!r}")


@dataclass(frozen=True)
class SpeakerDb:
    """Enrolled speakers in enrollment order plus the configs used to train them."""

    speakers: tuple = ()
    mfcc_config: MfccConfig = field(default_factory=MfccConfig)
    lbg_config: LbgConfig = field(default_factory=LbgConfig)

    def __post_init__(self):
        object.__setattr__(self, "speakers", tuple(self.speakers))
        ids = [s.id for s in self.speakers]
        if len(set(ids)) != len(ids):
            raise DuplicateIdError("speaker ids must be unique")
        if len({s.codebook.dim for s in self.speakers}) > 1:
            raise DimensionMismatchError("all codebooks must share one dimension")

    @property
    def ids(self):
        return [s.id for s in self.speakers]

    @property
    def dim(self):
        return self.speakers[0].codebook.dim if self.speakers else None

    def __len__(self):
        return len(self.speakers)

    def __getitem__(self, speaker_id):
        for s in self.speakers:
            if s.id == speaker_id:
                return s
        raise KeyError(speaker_id)


@dataclass(frozen=True)
class EnrollReport:
    id: str
    frames: int
    distortion: float
    trace: object


@dataclass(frozen=True)
class MatchResult:
    distances: dict
    predicted: str

    @property
    def margin(self):
        """Runner-up distance minus winning distance; ``None`` with one speaker."""
        if len(self.distances) < 2:
            return None
        best, second = sorted(self.distances.values())[:2]
        return second - best

    def ranked(self):
        return sorted(self.distances.items(), key=lambda kv: (kv[1], kv[0]))


def _argmin_id(distances):
    best = min(distances.values())
    return min(k for k, v in distances.items() if v == best)


def train_model(speaker_id, clips, mfcc_config, lbg_config):
    """Codebook for one speaker from the pooled frames of all ``clips``."""
    clips = list(clips)
    if not clips:
        raise EmptyInputError(f"no clips for speaker {speaker_id!r}")
    feats = np.vstack([extract_mfcc(c, mfcc_config) for c in clips])
    codebook, trace = train_codebook(feats, lbg_config)
    report = EnrollReport(speaker_id, feats.shape[0], avg_distortion(feats, codebook), trace)
    return SpeakerModel(speaker_id, codebook), report


def enroll(speaker_id, clips, db):
    """Return a new db with ``speaker_id`` appended."""
    db, _ = enroll_with_report(speaker_id, clips, db)
    return db


def enroll_with_report(speaker_id, clips, db):
    if speaker_id in db.ids:
        raise DuplicateIdError(f"speaker {speaker_id!r} is already enrolled")
    model, report = train_model(speaker_id, clips, db.mfcc_config, db.lbg_config)
    return replace(db, speakers=db.speakers + (model,)), report


def enroll_many(labeled, db):
    """Enroll ``[(id, clips), ...]`` in order; speakers train in parallel.

    Returns the new db and one :class:`EnrollReport` per speaker.
    """
    labeled = list(labeled)
    seen = set(db.ids)
    for sid, _ in labeled:
        if sid in seen:
            raise DuplicateIdError(f"speaker {sid!r} is already enrolled")
        seen.add(sid)
    results = parallel_map(
        lambda item: train_model(item[0], item[1], db.mfcc_config, db.lbg_config), labeled
    )
    models = tuple(m for m, _ in results)
    return replace(db, speakers=db.speakers + models), [r for _, r in results]


def match_features(features, db):
    if not len(db):
        raise EmptyInputError("speaker database is empty")
    if features.shape[1] != db.dim:
        raise DimensionMismatchError(
            f"features have dimension {features.shape[1]}, database codebooks {db.dim}"
        )
    distances = {s.id: avg_distortion(features, s.codebook) for s in db.speakers}
    return MatchResult(distances, _argmin_id(distances))


def identify(clip, db, mfcc_config=None):
    """Score ``clip`` against every enrolled speaker.

    Passing ``mfcc_config`` asserts the db was trained under that config.
    """
    if mfcc_config is not None and mfcc_config != db.mfcc_config:
        raise ConfigMismatchError(
            f"database was trained with {db.mfcc_config}, caller requested {mfcc_config}"
        )
    return match_features(extract_mfcc(clip, db.mfcc_config), db)


@dataclass(frozen=True)
class DistanceMatrix:
    true_ids: list
    speaker_ids: list
    distances: np.ndarray
    predictions: list

    @property
    def accuracy(self):
        hits = sum(t == p for t, p in zip(self.true_ids, self.predictions))
        return hits / len(self.true_ids)

    @property
    def correct(self):
        return sum(t == p for t, p in zip(self.true_ids, self.predictions))

    @property
    def margins(self):
        """Per row: runner-up distance minus winning distance."""
        if self.distances.shape[1] < 2:
            return np.full(self.distances.shape[0], np.nan)
        part = np.sort(self.distances, axis=1)
        return part[:, 1] - part[:, 0]

    def to_csv(self, path):
        lines = ["true_id," + ",".join(self.speaker_ids) + ",predicted"]
        for tid, row, pred in zip(self.true_ids, self.distances, self.predictions):
            lines.append(tid + "," + ",".join(f"{v:.10f}" for v in row) + "," + pred)
        lines.append(f"accuracy,{self.accuracy:.6f}")
        Path(path).write_text("\n".join(lines) + "\n")


def distance_matrix(labeled_clips, db):
    """One row per ``(true_id, clip)`` in input order, one column per db speaker."""
    labeled_clips = list(labeled_clips)
    if not labeled_clips:
        raise EmptyInputError("no clips to evaluate")
    results = parallel_map(lambda item: identify(item[1], db), labeled_clips)
    dist = np.array([[r.distances[s] for s in db.ids] for r in results])
    return DistanceMatrix(
        [t for t, _ in labeled_clips], db.ids, dist, [r.predicted for r in results]
    )


def _natural_key(name):
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", name)]


def scan_corpus(directory):
    """Map speaker id -> sorted wav paths.

    ``<dir>/<id>.wav`` holds one clip; ``<dir>/<id>/*.wav`` holds several.
    Ids come back in natural order (s2 before s10).
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise IoFailure(f"{directory} is not a directory")
    found = {}
    for entry in sorted(directory.iterdir()):
        if entry.is_file() and entry.suffix.lower() == ".wav":
            sid, paths = entry.stem, [entry]
        elif entry.is_dir():
            paths = sorted(p for p in entry.iterdir() if p.is_file() and p.suffix.lower() == ".wav")
            if not paths:
                continue
            sid = entry.name
        else:
            continue
        if sid in found:
            raise DuplicateIdError(f"speaker {sid!r} appears more than once in {directory}")
        found[sid] = paths
    return {k: found[k] for k in sorted(found, key=_natural_key)}


def load_corpus(directory):
    """``[(id, [AudioClip, ...]), ...]`` for a corpus directory."""
    return [(sid, [read_wav(p) for p in paths]) for sid, paths in scan_corpus(directory).items()]


def _fmt_float(x):
    return repr(float(x))


def dumps_db(db):
    m, g = db.mfcc_config, db.lbg_config
    lines = [
        DB_MAGIC,
        f"MFCC {m.frame_len} {m.overlap} {_fmt_float(m.preemphasis_alpha)} "
        f"{int(m.preemphasis_enabled)} {m.num_filters} {m.coeff_lo} {m.coeff_hi} "
        f"{_fmt_float(m.log_floor)}",
        f"LBG {g.target_size} {_fmt_float(g.epsilon)} {_fmt_float(g.rel_distortion_tol)} "
        f"{g.max_lloyd_iters}",
    ]
    for s in db.speakers:
        cw = s.codebook.codewords
        lines.append(f"SPEAKER {s.id} {cw.shape[0]} {cw.shape[1]}")
        lines += [" ".join(f"{v:.16e}" for v in row) for row in cw]
    return "\n".join(lines) + "\n"


def save_db(db, path):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dumps_db(db))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _parse_config(tokens, tag, types):
    if not tokens or tokens[0] != tag or len(tokens) != len(types) + 1:
        raise FormatError(f"malformed {tag} line")
    values = []
    for tok, typ in zip(tokens[1:], types):
        try:
            if typ is bool:
                if tok not in ("0", "1"):
                    raise ValueError(tok)
                values.append(tok == "1")
            else:
                values.append(typ(tok))
        except ValueError:
            raise FormatError(f"bad value {tok!r} in {tag} line") from None
    return values


def loads_db(text):
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != DB_MAGIC:
        raise FormatError("bad magic or version")
    if len(lines) < 3:
        raise FormatError("missing config lines")
    mvals = _parse_config(lines[1].split(" "), "MFCC", (int, int, float, bool, int, int, int, float))
    gvals = _parse_config(lines[2].split(" "), "LBG", (int, float, float, int))
    try:
        mfcc = MfccConfig(*mvals)
        lbg = LbgConfig(*gvals)
    except ConfigError as exc:
        raise FormatError(f"invalid stored config: {exc}") from None

    speakers = []
    i = 3
    while i < len(lines):
        head = lines[i].split(" ")
        if len(head) != 4 or head[0] != "SPEAKER":
            raise FormatError(f"line {i + 1}: expected SPEAKER header")
        try:
            size, dim = int(head[2]), int(head[3])
        except ValueError:
            raise FormatError(f"line {i + 1}: bad codebook shape") from None
        if size < 1 or dim < 1:
            raise FormatError(f"line {i + 1}: codebook shape must be positive")
        rows = lines[i + 1 : i + 1 + size]
        if len(rows) != size:
            raise FormatError(f"speaker {head[1]!r}: expected {size} codeword rows")
        try:
            cw = np.array([[float(v) for v in row.split(" ")] for row in rows])
        except ValueError:
            raise FormatError(f"speaker {head[1]!r}: bad number") from None
        if cw.shape != (size, dim) or not np.all(np.isfinite(cw)):
            raise FormatError(f"speaker {head[1]!r}: expected {size} rows of {dim} finite numbers")
        try:
            speakers.append(SpeakerModel(head[1], Codebook(cw)))
        except ValueError as exc:
            raise FormatError(str(exc)) from None
        i += 1 + size
    try:
        return SpeakerDb(tuple(speakers), mfcc, lbg)
    except (DuplicateIdError, DimensionMismatchError) as exc:
        raise FormatError(str(exc)) from None


def load_db(path):
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError:
        raise FormatError(f"{path} is not UTF-8 text") from None
    return loads_db(text)


def summarize_margins(matrix):
    m = matrix.margins
    m = m[np.isfinite(m)]
    if m.size == 0:
        return {"mean": math.nan, "min": math.nan}
    return {"mean": float(m.mean()), "min": float(m.min())}
