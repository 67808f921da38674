"""Semi-supervised k-means with hard label constraints, and the
unconstrained k = 2 sub-clustering used to propose splits.

Cluster ``c`` of the first ``len(classes)`` clusters is owned by
``classes[c]``: every labelled instance of that class is locked to it, so
must-link and cannot-link hold by construction.
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimMismatch, InfeasibleK, TooFewPoints

MAX_ITER = 300
N_INIT = 10  # restarts for fresh (non warm-started) runs; best inertia wins


@dataclass(frozen=True)
class LabelConstraints:
    labels: np.ndarray  # class id per instance, -1 = unlabelled
    classes: tuple

    @classmethod
    def from_labels(cls, labels):
        labels = np.asarray(labels, dtype=np.int64)
        classes = tuple(int(c) for c in np.unique(labels[labels >= 0]))
        return cls(labels, classes)

    @classmethod
    def none(cls, n):
        return cls(np.full(n, -1, dtype=np.int64), ())

    @property
    def n_classes(self):
        return len(self.classes)

    @property
    def labelled(self):
        return self.labels >= 0


@dataclass
class KMeansResult:
    centers: np.ndarray
    assignment: np.ndarray
    inertia: float
    owners: np.ndarray  # class id owning each cluster, -1 for free clusters
    n_iter: int = 0
    inertia_trace: list = field(default_factory=list)


def _kmeanspp(X, existing, n_new, rng):
    """k-means++ seeds drawn from ``X``, with D^2 weights measured against
    ``existing`` centers as well as previously drawn ones."""
    chosen = []
    if len(existing):
        d2 = kernels.assign_nearest(X, existing)[1]
    else:
        d2 = None
    for _ in range(n_new):
        if d2 is None or d2.sum() <= 0:
            i = int(rng.integers(len(X)))
        else:
            i = int(rng.choice(len(X), p=d2 / d2.sum()))
        chosen.append(X[i])
        nd = kernels.sq_dists(X, X[i:i + 1])[:, 0]
        d2 = nd if d2 is None else np.minimum(d2, nd)
    return np.array(chosen).reshape(n_new, X.shape[1])


def _lock_map(cons, owners):
    """Cluster index for every instance, -1 where the instance is free."""
    locked = np.full(len(cons.labels), -1, dtype=np.int64)
    owner_idx = {int(c): j for j, c in enumerate(owners) if c >= 0}
    for c in cons.classes:
        if c not in owner_idx:
            raise InfeasibleK(f"class {c} has no owning cluster")
        locked[cons.labels == c] = owner_idx[c]
    return locked


def lloyd(X, centers, locked, max_iter=MAX_ITER):
    """Constrained Lloyd iterations from the given centers.

    ``locked[i] >= 0`` pins instance ``i`` to that cluster. Returns
    (centers, assignment, inertia, n_iter, inertia_trace).
    """
    k = len(centers)
    centers = np.array(centers, dtype=float)
    free = locked < 0
    assignment = None
    trace = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        new, d2 = kernels.assign_nearest(X, centers)
        new = np.where(free, new, locked)
        counts, sums = kernels.cluster_sums(X, new, k)
        # empty clusters take the free point farthest from its center, from
        # clusters that keep at least one member
        for j in np.flatnonzero(counts == 0):
            dist = np.sum((X - centers[new]) ** 2, axis=1)
            movable = free & (counts[new] > 1) & (dist > 0)
            if not movable.any():
                continue
            i = int(np.argmax(np.where(movable, dist, -1.0)))
            counts[new[i]] -= 1
            sums[new[i]] -= X[i]
            new[i] = j
            counts[j] = 1
            sums[j] = X[i]
        nz = counts > 0
        centers[nz] = sums[nz] / counts[nz, None]
        inertia = float(np.sum((X - centers[new]) ** 2))
        trace.append(inertia)
        if assignment is not None and np.array_equal(new, assignment):
            assignment = new
            break
        assignment = new
    return centers, assignment, trace[-1], n_iter, trace


def ss_kmeans(X, cons, k, seed=0, centers=None, owners=None, max_iter=MAX_ITER, n_init=N_INIT):
    """Constrained k-means.

    Without ``centers`` the first ``K^l`` centers start at the labelled class
    means and the rest are k-means++ seeds over unlabelled points. Passing
    ``centers`` (and ``owners``, the class owning each center or -1) warm
    starts from an existing solution. Fresh runs are repeated ``n_init``
    times from independent seedings and the lowest-inertia run is kept.
    """
    X = np.ascontiguousarray(X, dtype=float)
    n = len(X)
    if len(cons.labels) != n:
        raise DimMismatch("constraints and data disagree on the number of instances")
    kl = cons.n_classes
    if k < kl:
        raise InfeasibleK(f"k={k} is smaller than the {kl} labelled classes")
    if k > n:
        raise InfeasibleK(f"k={k} exceeds the {n} instances")
    rng = np.random.default_rng(seed)
    if centers is None:
        owners = np.array(list(cons.classes) + [-1] * (k - kl), dtype=np.int64)
        means = np.array([X[cons.labels == c].mean(axis=0) for c in cons.classes]).reshape(kl, X.shape[1])
        pool = X[~cons.labelled]
        if k > kl and len(pool) == 0:
            raise InfeasibleK("free clusters requested but every instance is labelled")
        locked = _lock_map(cons, owners)
        best = None
        for _ in range(max(1, n_init if k > kl else 1)):
            seeds = _kmeanspp(pool, means, k - kl, rng)
            run = lloyd(X, np.vstack([means, seeds]), locked, max_iter)
            if best is None or run[2] < best[2]:
                best = run
        centers, assignment, inertia, n_iter, trace = best
        return KMeansResult(centers, assignment, inertia, owners, n_iter, trace)
    else:
        centers = np.array(centers, dtype=float)
        owners = np.asarray(owners, dtype=np.int64)
        if len(centers) != k or len(owners) != k:
            raise DimMismatch("warm start needs k centers and k owners")
    locked = _lock_map(cons, owners)
    centers, assignment, inertia, n_iter, trace = lloyd(X, centers, locked, max_iter)
    return KMeansResult(centers, assignment, inertia, owners, n_iter, trace)


@dataclass
class SubClusters:
    centers: np.ndarray  # 2 x d
    covs: np.ndarray  # 2 x d x d
    weights: np.ndarray  # 2
    assignment: np.ndarray  # 0/1 per point

    @property
    def counts(self):
        return np.bincount(self.assignment, minlength=2)


def empirical_cov(Z, mode="full"):
    Z = np.atleast_2d(Z)
    d = Z.shape[1]
    if len(Z) == 0:
        return np.eye(d)
    C = Z - Z.mean(axis=0)
    cov = C.T @ C / len(Z)
    if mode == "diag":
        cov = np.diag(np.diag(cov))
    tr = np.trace(cov)
    ridge = 1e-6 * tr / d if tr > 0 else 1e-12
    return cov + ridge * np.eye(d)


def subcluster(points, seed=0, covariance_mode="full", locked=None):
    """k = 2 k-means inside one component.

    ``locked`` optionally marks points that must stay together in
    sub-cluster 0. Identical points all tie to sub-cluster 0, leaving
    sub-cluster 1 empty.
    """
    Z = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
    if len(Z) < 2:
        raise TooFewPoints("sub-clustering needs at least two points")
    rng = np.random.default_rng(seed)
    lock = np.full(len(Z), -1, dtype=np.int64)
    if locked is not None and np.any(locked):
        lock[np.asarray(locked, dtype=bool)] = 0
        c0 = Z[lock == 0].mean(axis=0, keepdims=True)
        pool = Z[lock < 0]
        if len(pool) == 0:
            c1 = c0.copy()
        else:
            c1 = _kmeanspp(pool, c0, 1, rng)
        init = np.vstack([c0, c1])
    else:
        init = _kmeanspp(Z, np.empty((0, Z.shape[1])), 2, rng)
    centers, assignment, _, _, _ = lloyd(Z, init, lock)
    counts = np.bincount(assignment, minlength=2)
    for j in range(2):
        if counts[j] == 0:
            centers[j] = centers[1 - j]
    covs = np.array([empirical_cov(Z[assignment == j], covariance_mode) for j in range(2)])
    weights = counts / counts.sum()
    return SubClusters(centers, covs, weights, assignment.astype(np.int64))
