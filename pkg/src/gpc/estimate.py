"""The alternating loop: embed, refit the mixture, refine the encoder,
then restructure the mixture by split/merge, until K settles."""
import time
from dataclasses import dataclass, field

import numpy as np

from . import niw
from .config import RunConfig, default_k_init
from .errors import DimMismatch
from .numkernel import project
from .replearn import Encoder, fit_projection, train_epoch
from .splitmerge import (
    MixtureSettings, constraint_violations, init_mixture, probe_partition, refit,
    split_merge_round,
)
from .sskmeans import LabelConstraints


@dataclass
class LoopResult:
    state: object
    k_history: list
    records: list  # line-delimited trace records
    k_init: int
    encoder: object = None
    pca: object = None
    violations: list = field(default_factory=list)
    epochs_run: int = 0

    @property
    def K(self):
        return self.state.K

    @property
    def assignment(self):
        return self.state.assignment

    @property
    def prototypes(self):
        return self.state.centers


def settings_from(cfg):
    return MixtureSettings(cfg.gamma_convention, cfg.covariance_mode, cfg.split_veto)


def make_prior(Z, cfg):
    return niw.default_hyper(Z, kappa=cfg.prior_kappa, nu=cfg.prior_nu, psi_scale=cfg.prior_psi_scale)


class Embedder:
    """Identity features, or encoder output projected on a PCA basis."""

    def __init__(self, X, cfg):
        self.cfg = cfg
        self.encoder = Encoder.init(X, cfg.embed_dim) if cfg.replearn else None
        self.pca = None

    def __call__(self, X):
        if self.encoder is None:
            return np.asarray(X, dtype=float)
        H = self.encoder(X)
        self.pca = fit_projection(H, self.cfg.pca_dim)
        return project(self.pca, H)


def estimate_k_loop(X, cons, cfg=None, seed=None, trace=True):
    """Alternate representation learning and class-number estimation.

    Stops after ``cfg.epochs`` epochs or once K has not changed for
    ``cfg.patience`` consecutive epochs.
    """
    cfg = cfg or RunConfig()
    seed = cfg.seed if seed is None else seed
    X = np.ascontiguousarray(X, dtype=float)
    if len(cons.labels) != len(X):
        raise DimMismatch("labels and features disagree on the number of instances")
    k_init = cfg.k_init if cfg.k_init is not None else default_k_init(cons.n_classes)
    # free clusters need unlabelled points to live on
    n_free = int(np.sum(~cons.labelled))
    k_init = min(max(k_init, cons.n_classes), cons.n_classes + n_free)
    root = np.random.default_rng(seed)
    train_rng = np.random.default_rng(root.integers(2**63 - 1))
    embed = Embedder(X, cfg)
    Z = embed(X)
    state = init_mixture(Z, cons, k_init, seed=int(root.integers(2**63 - 1)), settings=settings_from(cfg))
    records = [{"type": "init", "K": state.K, "uids": state.uids}]
    tcfg = cfg.train_config()
    labelled = cons.labelled
    history, violations = [], []
    stable = 0
    epoch = 0
    for epoch in range(1, cfg.epochs + 1):
        state.epoch = epoch
        if epoch > 1:
            Z = embed(X)
        state, pruned = refit(state, Z)
        if pruned:
            records.append({"type": "prune", "epoch": epoch, "uids": pruned})
        if embed.encoder is not None:
            embed.encoder = train_epoch(
                embed.encoder, X, labelled, state.assignment, state.K, embed.pca, tcfg, epoch, train_rng,
            )
        prior = make_prior(Z, cfg)
        before = state.K
        state, log = split_merge_round(state, prior)
        records.append(log.to_dict())
        violations.append(constraint_violations(state))
        history.append(state.K)
        stable = stable + 1 if state.K == before and not pruned else 0
        if stable >= cfg.patience:
            break
    records.append({"type": "final", "K": state.K, "uids": state.uids})
    return LoopResult(state, history, records if trace else [], k_init, embed.encoder, embed.pca,
                      violations, epoch if cfg.epochs else 0)


def probe_k_on_labelled(X, labels, split_ratio, cfg=None, seed=0):
    """Hide the labels of a fraction of the labelled classes and estimate how
    many classes were hidden. Returns (estimated K^n, true K^n, result)."""
    labels = np.asarray(labels, dtype=np.int64)
    keep = labels >= 0
    X, labels = np.asarray(X)[keep], labels[keep]
    classes = sorted(int(c) for c in np.unique(labels))
    retained, probe = probe_partition(classes, split_ratio, seed)
    masked = np.where(np.isin(labels, probe), -1, labels)
    cons = LabelConstraints(masked, tuple(retained))
    result = estimate_k_loop(X, cons, cfg, seed=seed)
    return result.K - len(retained), len(probe), result


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0
