"""Dense numerical primitives: Cholesky log-determinants, the log
multivariate gamma function, Gaussian log-densities and PCA.

Everything here is pure and works in log space where a likelihood is
involved.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gammaln

from .errors import DimMismatch, DomainError, NotSPD, RankError

SYM_RTOL = 1e-10
LN_PI = float(np.log(np.pi))


def symmetrize(A):
    A = np.asarray(A, dtype=float)
    return 0.5 * (A + A.T)


def check_symmetric(A, rtol=SYM_RTOL):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimMismatch(f"expected a square matrix, got shape {A.shape}")
    scale = max(np.abs(A).max(initial=0.0), 1e-300)
    return np.abs(A - A.T).max(initial=0.0) <= rtol * scale


def cholesky(A):
    """Lower Cholesky factor of the symmetrized ``A``; raises NotSPD."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimMismatch(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NotSPD("matrix has non-finite entries")
    if not check_symmetric(A):
        raise NotSPD("matrix is not symmetric")
    try:
        L = np.linalg.cholesky(symmetrize(A))
    except np.linalg.LinAlgError as exc:
        raise NotSPD(str(exc)) from None
    if not np.all(np.diag(L) > 0):
        raise NotSPD("non-positive pivot")
    return L


def cholesky_logdet(A):
    """ln det(A) for SPD ``A`` as twice the sum of log pivots."""
    L = cholesky(A)
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def log_mvgamma(d, a):
    """ln Gamma_d(a) = d(d-1)/4 ln(pi) + sum_j ln Gamma(a + (1-j)/2)."""
    d = int(d)
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    if not a > (d - 1) / 2.0:
        raise DomainError(f"log_mvgamma needs a > {(d - 1) / 2.0}, got {a}")
    j = np.arange(1, d + 1)
    return d * (d - 1) / 4.0 * LN_PI + float(np.sum(gammaln(a + (1.0 - j) / 2.0)))


def mvn_logpdf(z, mu, sigma):
    """Log-density of N(mu, sigma) at z (one point or rows of a matrix)."""
    z = np.asarray(z, dtype=float)
    mu = np.asarray(mu, dtype=float)
    d = mu.shape[-1]
    if z.shape[-1] != d or np.shape(sigma) != (d, d):
        raise DimMismatch("inconsistent dimensions in mvn_logpdf")
    L = cholesky(sigma)
    diff = np.atleast_2d(z - mu)
    sol = solve_triangular(L, diff.T, lower=True)
    maha = np.sum(sol * sol, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    out = -0.5 * (d * np.log(2 * np.pi) + logdet + maha)
    return float(out[0]) if z.ndim == 1 else out


@dataclass(frozen=True)
class PCAProjection:
    basis: np.ndarray  # input_dim x q, orthonormal columns
    singular_values: np.ndarray  # q, non-increasing
    mean: np.ndarray  # input_dim
    n_rows: int
    total_variance: float

    @property
    def input_dim(self):
        return self.basis.shape[0]

    @property
    def output_dim(self):
        return self.basis.shape[1]

    @property
    def explained_variance(self):
        return self.singular_values ** 2 / (self.n_rows - 1)

    @property
    def explained_variance_ratio(self):
        if self.total_variance <= 0:
            return np.zeros_like(self.singular_values)
        return self.explained_variance / self.total_variance


def fit_pca(X, q, strict=True):
    """Top-``q`` principal directions of ``X`` from the eigendecomposition
    of its sample covariance.

    With ``strict`` a rank-deficient ``X`` raises :class:`RankError` whose
    ``projection`` keeps only the directions with nonzero variance. Without
    it the basis is completed by null-space eigenvectors so that the output
    always has ``q`` orthonormal columns.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimMismatch("fit_pca expects a matrix")
    n, d = X.shape
    if n < 2:
        raise DimMismatch("fit_pca needs at least 2 rows")
    if not 1 <= q <= min(n, d):
        raise DimMismatch(f"q={q} outside [1, {min(n, d)}]")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = symmetrize(Xc.T @ Xc / (n - 1))
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    # fix the sign so that the largest-magnitude entry of each direction is positive
    idx = np.argmax(np.abs(evecs), axis=0)
    signs = np.sign(evecs[idx, np.arange(d)])
    signs[signs == 0] = 1.0
    evecs = evecs * signs
    total = float(np.trace(cov))
    S = np.sqrt(evals * (n - 1))
    # threshold on the eigenvalues: their rounding noise is ~eps * largest
    tol = max(n, d) * np.finfo(float).eps * (evals[0] if evals.size else 0.0)
    rank = int(np.sum(evals > tol))
    proj = PCAProjection(evecs[:, :q].copy(), S[:q].copy(), mean, n, total)
    if rank < q and strict:
        partial = PCAProjection(evecs[:, :rank].copy(), S[:rank].copy(), mean, n, total)
        raise RankError(f"only {rank} nonzero singular values, {q} requested", partial)
    return proj


def project(P, z):
    """Coordinates of ``z`` (vector or rows) in the principal basis."""
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != P.input_dim:
        raise DimMismatch(f"expected {P.input_dim} features, got {z.shape[-1]}")
    return (z - P.mean) @ P.basis
