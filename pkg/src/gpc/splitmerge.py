"""Semi-supervised Gaussian mixture with stochastic split/merge moves.

Each component carries a k = 2 sub-clustering. A round first proposes a
split of every component (Metropolis-Hastings ratio from NIW marginal
likelihoods), then merges among the components that were not just split.
Label-derived vetoes keep labelled classes apart and intact.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import niw
from .errors import DimMismatch, TooFewClasses, TooFewPoints
from .sskmeans import LabelConstraints, SubClusters, empirical_cov, ss_kmeans, subcluster


@dataclass(frozen=True)
class MixtureSettings:
    gamma_convention: str = "factorial"
    covariance_mode: str = "full"
    split_veto: str = "all"


@dataclass
class GaussComponent:
    uid: int
    members: np.ndarray  # sorted instance indices
    weight: float
    mu: np.ndarray
    sigma: np.ndarray
    label: int = -1  # labelled class contained in this component, -1 if none
    n_labelled: int = 0
    sub: object = None  # SubClusters aligned with ``members``

    @property
    def n(self):
        return len(self.members)


class MixtureState:
    def __init__(self, Z, cons, components, rng, next_uid, epoch=0, settings=None):
        self.Z = Z
        self.cons = cons
        self.components = components
        self.rng = rng
        self.next_uid = next_uid
        self.epoch = epoch
        self.settings = settings or MixtureSettings()

    @property
    def K(self):
        return len(self.components)

    @property
    def n(self):
        return len(self.Z)

    @property
    def uids(self):
        return [c.uid for c in self.components]

    @property
    def centers(self):
        return np.array([c.mu for c in self.components])

    @property
    def assignment(self):
        a = np.full(self.n, -1, dtype=np.int64)
        for k, c in enumerate(self.components):
            a[c.members] = k
        return a

    def new_uid(self):
        uid = self.next_uid
        self.next_uid += 1
        return uid


def make_component(state, uid, members, sub_seed, sub=None):
    members = np.sort(np.asarray(members, dtype=np.int64))
    Zm = state.Z[members]
    labs = state.cons.labels[members]
    present = np.unique(labs[labs >= 0])
    label = int(present[0]) if len(present) else -1
    comp = GaussComponent(
        uid=uid, members=members, weight=len(members) / state.n,
        mu=Zm.mean(axis=0), sigma=empirical_cov(Zm, state.settings.covariance_mode),
        label=label, n_labelled=int(np.sum(labs >= 0)),
    )
    if len(present) > 1:
        comp.label = -2  # constraint violation marker; never produced by ss_kmeans
    if sub is not None:
        comp.sub = sub
    elif len(members) >= 2:
        locked = labs >= 0 if state.settings.split_veto == "all" else None
        comp.sub = subcluster(Zm, sub_seed, state.settings.covariance_mode, locked)
    return comp


def _seed(rng):
    return int(rng.integers(2**63 - 1))


def _build(Z, cons, result, rng, settings, uids=None, epoch=0):
    state = MixtureState(Z, cons, [], rng, 0, epoch, settings)
    comps = []
    for k in range(len(result.centers)):
        members = np.flatnonzero(result.assignment == k)
        if len(members) == 0:
            continue
        uid = uids[k] if uids is not None else state.new_uid()
        comps.append(make_component(state, uid, members, _seed(rng)))
    state.components = comps
    if uids is None:
        state.next_uid = len(result.centers)
    return state


def init_mixture(Z, cons, k_init, seed=0, settings=None):
    """Fresh mixture from semi-supervised k-means with k = K_init."""
    rng = np.random.default_rng(seed)
    Z = np.ascontiguousarray(Z, dtype=float)
    result = ss_kmeans(Z, cons, k_init, seed=_seed(rng))
    return _build(Z, cons, result, rng, settings or MixtureSettings())


def refit(state, Z):
    """Warm-started constrained k-means on new embeddings ``Z`` followed by
    hard-assignment parameter updates. Components left empty are dropped;
    their uids are returned as the second value."""
    Z = np.ascontiguousarray(Z, dtype=float)
    if len(Z) != state.n:
        raise DimMismatch("refit embeddings must cover the same instances")
    centers = np.array([Z[c.members].mean(axis=0) for c in state.components])
    owners = np.array([c.label if c.label >= 0 else -1 for c in state.components], dtype=np.int64)
    result = ss_kmeans(Z, state.cons, state.K, seed=_seed(state.rng), centers=centers, owners=owners)
    new = MixtureState(Z, state.cons, [], state.rng, state.next_uid, state.epoch, state.settings)
    comps, pruned = [], []
    for k, comp in enumerate(state.components):
        members = np.flatnonzero(result.assignment == k)
        if len(members) == 0:
            pruned.append(comp.uid)
            continue
        comps.append(make_component(new, comp.uid, members, _seed(state.rng)))
    new.components = comps
    return new, pruned


def log_gamma_count(n, convention):
    """ln Gamma(n) under the chosen reading: ln n! or ln (n-1)!."""
    return float(gammaln(n + 1)) if convention == "factorial" else float(gammaln(n))


def _stats(state, idx):
    return niw.SuffStats.from_points(state.Z[idx], state.Z.shape[1])


def log_Hs(state, prior, i):
    """Log Hastings ratio for splitting component ``i`` along its
    sub-clusters."""
    comp = state.components[i]
    if comp.sub is None or np.any(comp.sub.counts == 0):
        raise TooFewPoints(f"component {i} has an empty sub-cluster")
    conv = state.settings.gamma_convention
    parts = [comp.members[comp.sub.assignment == j] for j in (0, 1)]
    out = -log_gamma_count(comp.n, conv) - niw.log_marginal(prior, _stats(state, comp.members))
    for p in parts:
        out += log_gamma_count(len(p), conv) + niw.log_marginal(prior, _stats(state, p))
    return out


def log_Hm(state, prior, i, j):
    """Log Hastings ratio for merging components ``i`` and ``j``."""
    a, b = state.components[i], state.components[j]
    conv = state.settings.gamma_convention
    union = np.concatenate([a.members, b.members])
    return (
        log_gamma_count(len(union), conv) + niw.log_marginal(prior, _stats(state, union))
        - log_gamma_count(a.n, conv) - niw.log_marginal(prior, _stats(state, a.members))
        - log_gamma_count(b.n, conv) - niw.log_marginal(prior, _stats(state, b.members))
    )


@dataclass
class Proposal:
    kind: str  # "split" or "merge"
    ids: tuple  # component uids
    log_h: float
    p: float
    u: float = float("nan")
    accepted: bool = False
    veto_reason: str | None = None
    result: tuple = ()  # uids created when accepted

    def to_dict(self):
        return {
            "kind": self.kind, "ids": list(self.ids),
            "log_h": None if not math.isfinite(self.log_h) else self.log_h,
            "p": self.p, "u": None if math.isnan(self.u) else self.u,
            "accepted": self.accepted, "veto_reason": self.veto_reason,
            "result": list(self.result),
        }


@dataclass
class SplitMergeLog:
    epoch: int
    proposals: list = field(default_factory=list)

    def to_dict(self):
        return {"type": "round", "epoch": self.epoch, "proposals": [p.to_dict() for p in self.proposals]}


def acceptance(log_h):
    if not math.isfinite(log_h):
        return 0.0
    return 1.0 if log_h >= 0 else math.exp(log_h)


def apply_vetoes(state, proposals):
    """Zero the probability of proposals that would break label structure."""
    by_uid = {c.uid: c for c in state.components}
    for prop in proposals:
        reason = None
        if prop.kind == "split":
            comp = by_uid[prop.ids[0]]
            if state.settings.split_veto == "any":
                labelled = comp.n_labelled > 0
            else:
                labelled = comp.n_labelled == comp.n
            if labelled:
                reason = "labelled_cluster"
            elif comp.sub is None or np.any(comp.sub.counts == 0):
                reason = "too_few_points"
        else:
            a, b = by_uid[prop.ids[0]], by_uid[prop.ids[1]]
            if a.label >= 0 and b.label >= 0 and a.label != b.label:
                reason = "cross_class"
        if reason is not None:
            prop.p = 0.0
            prop.veto_reason = reason
    return proposals


def _split_proposal(state, prior, i):
    comp = state.components[i]
    prop = Proposal("split", (comp.uid,), float("nan"), 0.0)
    apply_vetoes(state, [prop])
    if prop.veto_reason is None:
        prop.log_h = float(log_Hs(state, prior, i))
        prop.p = acceptance(prop.log_h)
    return prop


def merge_candidates(comps):
    """Nearest-centroid pairs, deduplicated, ordered by distance."""
    if len(comps) < 2:
        return []
    C = np.array([c.mu for c in comps])
    D = np.sum((C[:, None, :] - C[None, :, :]) ** 2, axis=-1)
    np.fill_diagonal(D, np.inf)
    pairs = set()
    for a in range(len(comps)):
        b = int(np.argmin(D[a]))
        pairs.add((min(a, b), max(a, b)))
    return sorted(pairs, key=lambda ab: (D[ab], ab))


def split_merge_round(state, prior, seed=None, accept_all=False):
    """One split pass then one merge pass. Returns (new state, log).

    ``accept_all`` accepts every proposal that is not vetoed.
    """
    rng = state.rng if seed is None else np.random.default_rng(seed)
    log = SplitMergeLog(state.epoch)
    out = MixtureState(state.Z, state.cons, [], rng, state.next_uid, state.epoch, state.settings)

    replaced = {}
    for i, comp in enumerate(state.components):
        prop = _split_proposal(state, prior, i)
        prop.u = float(rng.random())
        prop.accepted = prop.veto_reason is None and (accept_all or prop.u < prop.p)
        if prop.accepted:
            children = []
            for j in (0, 1):
                members = comp.members[comp.sub.assignment == j]
                children.append(make_component(out, out.new_uid(), members, _seed(rng)))
            # the sub-clustering fixes the children's parameters
            for j, child in enumerate(children):
                child.mu = comp.sub.centers[j].copy()
                child.sigma = comp.sub.covs[j].copy()
            replaced[i] = children
            prop.result = tuple(c.uid for c in children)
        log.proposals.append(prop)

    eligible = [i for i in range(state.K) if i not in replaced]
    merged_into = {}
    skip = set()
    used = set()
    for a, b in merge_candidates([state.components[i] for i in eligible]):
        i, j = eligible[a], eligible[b]
        if i in used or j in used:
            continue
        ci, cj = state.components[i], state.components[j]
        prop = Proposal("merge", (ci.uid, cj.uid), float("nan"), 0.0)
        apply_vetoes(state, [prop])
        if prop.veto_reason is None:
            prop.log_h = float(log_Hm(state, prior, i, j))
            prop.p = acceptance(prop.log_h)
        prop.u = float(rng.random())
        prop.accepted = prop.veto_reason is None and (accept_all or prop.u < prop.p)
        if prop.accepted:
            used.update((i, j))
            members = np.concatenate([ci.members, cj.members])
            order = np.argsort(members, kind="stable")
            members = members[order]
            sub_assign = np.concatenate([np.zeros(ci.n, np.int64), np.ones(cj.n, np.int64)])[order]
            sub = SubClusters(
                np.array([ci.mu, cj.mu]), np.array([ci.sigma, cj.sigma]),
                np.array([ci.n, cj.n]) / (ci.n + cj.n), sub_assign,
            )
            merged = make_component(out, out.new_uid(), members, None, sub=sub)
            merged_into[min(i, j)] = merged
            skip.add(max(i, j))
            prop.result = (merged.uid,)
        log.proposals.append(prop)

    comps = []
    for i, comp in enumerate(state.components):
        if i in replaced:
            comps.extend(replaced[i])
        elif i in merged_into:
            comps.append(merged_into[i])
        elif i not in skip:
            comps.append(comp)
    for c in comps:
        c.weight = c.n / state.n
    out.components = comps
    return out, log


def assign_by_prototype(state, z):
    """Nearest component mean to ``z`` (lowest id wins ties)."""
    C = state.centers
    d = np.sum((C - np.asarray(z, dtype=float)) ** 2, axis=1)
    return int(np.argmin(d))


def constraint_violations(state):
    """Count broken must-link / cannot-link relations among labelled
    instances, plus one per missing labelled class."""
    a = state.assignment
    cons = state.cons
    bad = 0
    seen = {}
    for c in cons.classes:
        comps = np.unique(a[cons.labels == c])
        bad += len(comps) - 1
        for k in comps:
            if k in seen:
                bad += 1
            seen[int(k)] = c
    bad += sum(1 for comp in state.components if comp.label == -2)
    return bad


def replay(records):
    """Re-apply logged operations to the logged initial uids; returns the
    resulting uid list (its length is the final K)."""
    uids = None
    for rec in records:
        kind = rec.get("type")
        if kind == "init":
            uids = list(rec["uids"])
        elif kind == "prune":
            for u in rec["uids"]:
                uids.remove(u)
        elif kind == "round":
            for prop in rec["proposals"]:
                if not prop["accepted"]:
                    continue
                if prop["kind"] == "split":
                    pos = uids.index(prop["ids"][0])
                    uids[pos:pos + 1] = prop["result"]
                else:
                    i, j = (uids.index(u) for u in prop["ids"])
                    keep, drop = min(i, j), max(i, j)
                    uids[keep] = prop["result"][0]
                    del uids[drop]
    return uids


def new_class_count(k_final, n_retained):
    return k_final - n_retained


def probe_partition(classes, split_ratio, seed):
    """Shuffle labelled classes and split them into (retained, probe)."""
    classes = list(classes)
    if len(classes) < 4:
        raise TooFewClasses(f"need at least 4 labelled classes, got {len(classes)}")
    if not 0 <= split_ratio < 1:
        raise ValueError("split_ratio must be in [0, 1)")
    rng = np.random.default_rng(seed)
    order = [classes[i] for i in rng.permutation(len(classes))]
    n_probe = int(math.floor(split_ratio * len(classes) + 0.5))
    n_probe = min(n_probe, len(classes) - 1)
    return sorted(order[n_probe:]), sorted(order[:n_probe])


__all__ = [
    "GaussComponent", "LabelConstraints", "MixtureSettings", "MixtureState", "Proposal",
    "SplitMergeLog", "acceptance", "apply_vetoes", "assign_by_prototype",
    "constraint_violations", "init_mixture", "log_Hm", "log_Hs", "merge_candidates",
    "probe_partition", "refit", "replay", "split_merge_round",
]
