"""NumPy implementations of the Lloyd-iteration kernels.

Used when the compiled extension is unavailable, and as the reference the
compiled versions are tested against.
"""
import numpy as np


def sq_dists(X, C):
    X = np.ascontiguousarray(X, dtype=np.float64)
    C = np.ascontiguousarray(C, dtype=np.float64)
    diff = X[:, None, :] - C[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def assign_nearest(X, C):
    """Index of the nearest row of ``C`` for each row of ``X`` (lowest index
    on ties) and the corresponding squared distance."""
    D = sq_dists(X, C)
    labels = np.argmin(D, axis=1).astype(np.int64)
    return labels, D[np.arange(len(labels)), labels]


def cluster_sums(X, labels, k):
    X = np.ascontiguousarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    counts = np.bincount(labels, minlength=k).astype(np.int64)
    sums = np.zeros((k, X.shape[1]))
    np.add.at(sums, labels, X)
    return counts, sums
