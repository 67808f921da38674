"""Affine-encoder representation learning with a self-supervised
contrastive loss plus a warmup-weighted prototypical contrastive loss.

Embeddings are projected onto a PCA basis and L2-normalized before any dot
product. Gradients are analytic; the PCA basis and the prototypes are held
constant within a step.
"""
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp, softmax

from .errors import DimMismatch, OwnerOutOfRange
from .numkernel import fit_pca, project


@dataclass(frozen=True)
class TrainConfig:
    tau: float = 0.1
    warmup: int = 20
    epochs: int = 200
    batch_labelled: int = 64
    batch_unlabelled: int = 64
    lr: float = 0.1
    sigma_aug: float = 0.1
    pca_dim: int = 128
    pca_refresh: str = "epoch"
    seed: int = 0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.warmup < 1:
            raise ValueError("warmup must be at least 1")
        if self.pca_refresh not in ("epoch", "batch"):
            raise ValueError("pca_refresh must be 'epoch' or 'batch'")


@dataclass(frozen=True)
class Encoder:
    """z = W ((x - loc) / scale) + b.

    ``loc`` and ``scale`` are a fixed standardization (one global scale, so
    the geometry of the input is preserved); only W and b are trained.
    """

    W: np.ndarray
    b: np.ndarray
    loc: np.ndarray
    scale: float

    @classmethod
    def init(cls, X, d_out=None):
        X = np.asarray(X, dtype=float)
        d_in = X.shape[1]
        d_out = d_in if d_out is None else int(d_out)
        if not 1 <= d_out <= d_in:
            raise DimMismatch("encoder output dimension must be in [1, d_in]")
        loc = X.mean(axis=0)
        scale = float(np.sqrt(np.mean(X.var(axis=0))))
        if not scale > 0:
            scale = 1.0
        return cls(np.eye(d_out, d_in), np.zeros(d_out), loc, scale)

    def standardize(self, X):
        return (np.asarray(X, dtype=float) - self.loc) / self.scale

    def __call__(self, X):
        return self.standardize(X) @ self.W.T + self.b


def warmup_weight(t, T):
    """lambda(t) = min(1, t / T)."""
    return min(1.0, t / T)


def combined_loss(t, l_cl, l_pcl, T):
    return l_cl + warmup_weight(t, T) * l_pcl


def two_views(x, sigma_aug, rng):
    """Two independent additive-Gaussian perturbations of ``x``."""
    x = np.asarray(x, dtype=float)
    if sigma_aug == 0:
        return x.copy(), x.copy()
    return x + sigma_aug * rng.standard_normal(x.shape), x + sigma_aug * rng.standard_normal(x.shape)


def loss_cl(Z, Zp, tau):
    """One-sided InfoNCE between paired views; returns (loss, dZ, dZp)."""
    Z = np.asarray(Z, dtype=float)
    Zp = np.asarray(Zp, dtype=float)
    n = len(Z)
    logits = Z @ Zp.T / tau
    loss = float(np.mean(logsumexp(logits, axis=1) - np.diag(logits)))
    G = softmax(logits, axis=1)
    G[np.diag_indices(n)] -= 1.0
    G /= n * tau
    return loss, G @ Zp, G.T @ Z


def loss_pcl(Z, protos, owner, tau):
    """Prototypical contrastive loss; the owner's prototype stays in the
    denominator. Returns (loss, dZ, dprotos)."""
    Z = np.asarray(Z, dtype=float)
    protos = np.asarray(protos, dtype=float)
    owner = np.asarray(owner, dtype=np.int64)
    n, k = len(Z), len(protos)
    if len(owner) != n:
        raise DimMismatch("owner must map every anchor")
    if owner.size and (owner.min() < 0 or owner.max() >= k):
        raise OwnerOutOfRange(f"owner index outside [0, {k})")
    logits = Z @ protos.T / tau
    rows = np.arange(n)
    loss = float(np.mean(logsumexp(logits, axis=1) - logits[rows, owner]))
    G = softmax(logits, axis=1)
    G[rows, owner] -= 1.0
    G /= n * tau
    return loss, G @ protos, G.T @ Z


def _normalize(V):
    norms = np.linalg.norm(V, axis=1, keepdims=True)
    norms = np.maximum(norms, 1e-12)
    return V / norms, norms


def _normalize_backward(Zn, norms, dZ):
    return (dZ - Zn * np.sum(Zn * dZ, axis=1, keepdims=True)) / norms


def prototypes_from(H, owner, k):
    """Per-component means of encoder outputs ``H`` (k x d_out)."""
    owner = np.asarray(owner, dtype=np.int64)
    counts = np.bincount(owner, minlength=k).astype(float)
    sums = np.zeros((k, H.shape[1]))
    np.add.at(sums, owner, H)
    return sums / np.maximum(counts, 1)[:, None]


def batch_objective(enc, xa, xb, proto_h, owner, pca, lam, tau):
    """Loss and (dW, db) of L_CL + lam * L_PCL for one batch of paired
    views. ``proto_h`` are prototypes in encoder-output space."""
    xs = [enc.standardize(xa), enc.standardize(xb)]
    H = [x @ enc.W.T + enc.b for x in xs]
    V = [project(pca, h) for h in H]
    (Za, na), (Zb, nb) = _normalize(V[0]), _normalize(V[1])
    l_cl, dZa, dZb = loss_cl(Za, Zb, tau)
    loss = l_cl
    if lam > 0 and proto_h is not None:
        P, _ = _normalize(project(pca, proto_h))
        l_pcl, dZa_p, _ = loss_pcl(Za, P, owner, tau)
        loss = l_cl + lam * l_pcl
        dZa = dZa + lam * dZa_p
    dW = np.zeros_like(enc.W)
    db = np.zeros_like(enc.b)
    for x, Zn, norms, dZ in ((xs[0], Za, na, dZa), (xs[1], Zb, nb, dZb)):
        dH = _normalize_backward(Zn, norms, dZ) @ pca.basis.T
        dW += dH.T @ x
        db += dH.sum(axis=0)
    return loss, dW, db


def cosine_lr(lr0, epoch, total):
    if total <= 0:
        return lr0
    return 0.5 * lr0 * (1.0 + math.cos(math.pi * min(epoch, total) / total))


def sample_batch(labelled_idx, unlabelled_idx, n_l, n_u, rng):
    take_l = min(n_l, len(labelled_idx))
    take_u = min(n_u, len(unlabelled_idx))
    parts = []
    if take_l:
        parts.append(rng.choice(labelled_idx, size=take_l, replace=False))
    if take_u:
        parts.append(rng.choice(unlabelled_idx, size=take_u, replace=False))
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


def fit_projection(H, q):
    q = min(q, H.shape[0], H.shape[1])
    return fit_pca(H, q, strict=False)


def train_epoch(enc, X, labelled, owner, n_components, pca, cfg, epoch, rng):
    """One pass of ceil(N / n) SGD steps over labelled/unlabelled batches.

    ``owner`` is the component of every instance, ``labelled`` a boolean
    mask. Prototypes are the component means of the encoder output at the
    start of the epoch. Returns the updated encoder.
    """
    X = np.asarray(X, dtype=float)
    n = len(X)
    lam = warmup_weight(epoch, cfg.warmup)
    lr = cosine_lr(cfg.lr, epoch, cfg.epochs)
    proto_h = prototypes_from(enc(X), owner, n_components)
    lab_idx = np.flatnonzero(labelled)
    unl_idx = np.flatnonzero(~np.asarray(labelled, dtype=bool))
    batch = cfg.batch_labelled + cfg.batch_unlabelled
    W, b = enc.W.copy(), enc.b.copy()
    for _ in range(math.ceil(n / batch)):
        idx = sample_batch(lab_idx, unl_idx, cfg.batch_labelled, cfg.batch_unlabelled, rng)
        if len(idx) < 2:
            break
        xa, xb = two_views(X[idx], cfg.sigma_aug, rng)
        cur = replace(enc, W=W, b=b)
        P = pca
        if cfg.pca_refresh == "batch":
            P = fit_projection(cur(X[idx]), pca.output_dim)
        _, dW, db = batch_objective(cur, xa, xb, proto_h, owner[idx], P, lam, cfg.tau)
        if lr != 0.0:
            W = W - lr * dW
            b = b - lr * db
    return replace(enc, W=W, b=b)


def evaluate_objective(enc, xa, xb, proto_h, owner, pca, lam, tau):
    return batch_objective(enc, xa, xb, proto_h, owner, pca, lam, tau)[0]
