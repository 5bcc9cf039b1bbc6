"""Hot loops of vector quantization.

Each kernel exists twice: a numba ``@njit`` loop and a vectorised numpy
equivalent. ``nearest_codeword`` and ``cluster_sums`` dispatch to one of them
according to :data:`vqspk._compat.USE_NUMBA`.
"""

import numpy as np

from ._compat import USE_NUMBA, njit


@njit(cache=True, nogil=True)
def _nearest_codeword_numba(vectors, codewords):
    n, dim = vectors.shape
    size = codewords.shape[0]
    index = np.empty(n, dtype=np.int64)
    sqdist = np.empty(n, dtype=np.float64)
    for i in range(n):
        best = np.inf
        best_j = 0
        for j in range(size):
            acc = 0.0
            for d in range(dim):
                diff = vectors[i, d] - codewords[j, d]
                acc += diff * diff
            # strict comparison keeps the lowest index on ties
            if acc < best:
                best = acc
                best_j = j
        index[i] = best_j
        sqdist[i] = best
    return index, sqdist


def _nearest_codeword_numpy(vectors, codewords):
    diff = vectors[:, None, :] - codewords[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    index = np.argmin(sq, axis=1)
    return index.astype(np.int64), sq[np.arange(len(vectors)), index]


@njit(cache=True, nogil=True)
def _cluster_sums_numba(vectors, labels, size):
    dim = vectors.shape[1]
    sums = np.zeros((size, dim), dtype=np.float64)
    counts = np.zeros(size, dtype=np.int64)
    for i in range(vectors.shape[0]):
        k = labels[i]
        counts[k] += 1
        for d in range(dim):
            sums[k, d] += vectors[i, d]
    return sums, counts


def _cluster_sums_numpy(vectors, labels, size):
    sums = np.zeros((size, vectors.shape[1]), dtype=np.float64)
    np.add.at(sums, labels, vectors)
    counts = np.bincount(labels, minlength=size).astype(np.int64)
    return sums, counts


if USE_NUMBA:
    _nearest_impl = _nearest_codeword_numba
    _sums_impl = _cluster_sums_numba
else:
    _nearest_impl = _nearest_codeword_numpy
    _sums_impl = _cluster_sums_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"


def nearest_codeword(vectors, codewords):
    """Index of and squared Euclidean distance to the closest codeword.

    Ties resolve to the lowest codeword index.
    """
    vectors = np.ascontiguousarray(vectors, dtype=np.float64)
    codewords = np.ascontiguousarray(codewords, dtype=np.float64)
    return _nearest_impl(vectors, codewords)


def cluster_sums(vectors, labels, size):
    """Per-cluster coordinate sums and member counts."""
    vectors = np.ascontiguousarray(vectors, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    return _sums_impl(vectors, labels, int(size))
