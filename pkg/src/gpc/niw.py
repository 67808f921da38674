"""Normal-Inverse-Wishart conjugate machinery.

The inverse-Wishart scale is parameterized as ``nu * Psi`` throughout, so
``Psi`` itself is on the scale of a covariance matrix.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, DomainError, NotSPD
from .numkernel import LN_PI, cholesky_logdet, log_mvgamma, symmetrize

RIDGE_REL = 1e-8


@dataclass(frozen=True)
class NIWHyper:
    m: np.ndarray
    kappa: float
    Psi: np.ndarray
    nu: float

    def __post_init__(self):
        d = len(self.m)
        if self.kappa <= 0:
            raise DomainError("kappa must be positive")
        if not self.nu > d - 1:
            raise DomainError(f"nu must exceed d - 1 = {d - 1}")
        if np.shape(self.Psi) != (d, d):
            raise DimMismatch("Psi shape does not match m")

    @property
    def dim(self):
        return len(self.m)

    @property
    def scale(self):
        """The inverse-Wishart scale matrix nu * Psi."""
        return self.nu * np.asarray(self.Psi)


def default_hyper(X, kappa=1.0, nu=None, psi_scale=1.0):
    """Data-scaled weak prior: global mean, kappa = 1, nu = d + 2 and
    nu * Psi equal to the (ridged) empirical covariance of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, d = X.shape
    if n == 0:
        raise DimMismatch("default_hyper needs at least one row")
    nu = float(d + 2) if nu is None else float(nu)
    cov = np.cov(X, rowvar=False, ddof=1).reshape(d, d) if n > 1 else np.zeros((d, d))
    tr = float(np.trace(cov))
    ridge = 1e-6 * (tr / d if tr > 0 else 1.0)
    Psi = psi_scale * (cov + ridge * np.eye(d)) / nu
    return NIWHyper(X.mean(axis=0), float(kappa), symmetrize(Psi), nu)


class SuffStats:
    """Count, mean and centered scatter of a point set.

    Stored centered (merged with Chan's pairwise update) so that clusters far
    from the origin do not lose precision; ``sum`` and ``sumsq`` are derived.
    """

    __slots__ = ("n", "mean", "scatter")

    def __init__(self, n, mean, scatter):
        self.n = int(n)
        self.mean = np.asarray(mean, dtype=float)
        self.scatter = np.asarray(scatter, dtype=float)

    @classmethod
    def empty(cls, d):
        return cls(0, np.zeros(d), np.zeros((d, d)))

    @classmethod
    def from_points(cls, Z, d=None):
        Z = np.asarray(Z, dtype=float)
        if Z.size == 0:
            if d is None:
                d = Z.shape[1] if Z.ndim == 2 else 0
            return cls.empty(d)
        Z = np.atleast_2d(Z)
        if d is not None and Z.shape[1] != d:
            raise DimMismatch(f"points have dimension {Z.shape[1]}, expected {d}")
        mean = Z.mean(axis=0)
        C = Z - mean
        return cls(len(Z), mean, symmetrize(C.T @ C))

    @property
    def dim(self):
        return len(self.mean)

    @property
    def sum(self):
        return self.n * self.mean

    @property
    def sumsq(self):
        return self.scatter + self.n * np.outer(self.mean, self.mean)

    def __add__(self, other):
        if self.dim != other.dim:
            raise DimMismatch("cannot merge statistics of different dimension")
        if other.n == 0:
            return SuffStats(self.n, self.mean.copy(), self.scatter.copy())
        if self.n == 0:
            return SuffStats(other.n, other.mean.copy(), other.scatter.copy())
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        scatter = self.scatter + other.scatter + np.outer(delta, delta) * (self.n * other.n / n)
        return SuffStats(n, mean, symmetrize(scatter))

    def __repr__(self):
        return f"SuffStats(n={self.n}, d={self.dim})"


def accumulate(points, d=None):
    return SuffStats.from_points(points, d)


@dataclass(frozen=True)
class NIWPosterior:
    kappa_star: float
    m_star: np.ndarray
    nu_star: float
    Psi_star: np.ndarray

    @property
    def scale(self):
        return self.nu_star * self.Psi_star

    def as_prior(self):
        return NIWHyper(self.m_star, self.kappa_star, self.Psi_star, self.nu_star)


def _check(prior, s):
    if s.dim != prior.dim:
        raise DimMismatch(f"statistics have dimension {s.dim}, prior {prior.dim}")


def posterior_scale(prior, s):
    """nu* Psi* via the centered-scatter form."""
    _check(prior, s)
    if s.n == 0:
        return prior.scale.copy()
    k_star = prior.kappa + s.n
    dev = s.mean - prior.m
    out = prior.scale + s.scatter + (prior.kappa * s.n / k_star) * np.outer(dev, dev)
    return symmetrize(out)


def posterior(prior, s):
    """Conjugate update of ``prior`` with the points summarized in ``s``."""
    _check(prior, s)
    k_star = prior.kappa + s.n
    nu_star = prior.nu + s.n
    m_star = (prior.kappa * prior.m + s.sum) / k_star
    scale = posterior_scale(prior, s)
    cholesky_logdet(scale)  # raises NotSPD on degenerate scatter
    return NIWPosterior(k_star, m_star, nu_star, scale / nu_star)


def _ridged_logdet(A):
    try:
        return cholesky_logdet(A)
    except NotSPD:
        d = A.shape[0]
        ridge = RIDGE_REL * max(np.trace(A) / d, np.finfo(float).tiny)
        return cholesky_logdet(A + ridge * np.eye(d))


def log_marginal(prior, s):
    """ln h(Z; theta): log probability of the points with mean and
    covariance integrated out against the NIW prior."""
    _check(prior, s)
    if s.n == 0:
        return 0.0
    d = prior.dim
    n = s.n
    k_star = prior.kappa + n
    nu_star = prior.nu + n
    return (
        -0.5 * n * d * LN_PI
        + log_mvgamma(d, nu_star / 2.0)
        - log_mvgamma(d, prior.nu / 2.0)
        + 0.5 * prior.nu * cholesky_logdet(prior.scale)
        - 0.5 * nu_star * _ridged_logdet(posterior_scale(prior, s))
        + 0.5 * d * (np.log(prior.kappa) - np.log(k_star))
    )
