"""Feature datasets: CSV and GPCF file formats, synthetic blob generation
and the labelled/unlabelled split protocol.

GPCF layout (all little-endian): b"GPCF", u32 version = 1, u64 N, u64 d,
N*d float64 row-major, N i64 labels (-1 = unlabelled).
"""
import csv
import io
import math
import os
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimMismatch, OverlapTooLarge, ParseError

MAGIC = b"GPCF"
VERSION = 1
HEADER = struct.Struct("<4sIQQ")


@dataclass(frozen=True)
class FeatureDataset:
    X: np.ndarray
    labels: np.ndarray  # -1 = unlabelled
    ids: np.ndarray
    old_classes: tuple = ()
    new_classes: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 1:
            raise DimMismatch("features must be a nonempty N x d matrix")
        if len(self.labels) != len(X) or len(self.ids) != len(X):
            raise DimMismatch("labels and ids must have one entry per row")
        if len(np.unique(self.ids)) != len(self.ids):
            raise DimMismatch("instance ids must be unique")
        old = set(self.old_classes)
        present = set(int(c) for c in np.unique(self.labels[self.labels >= 0]))
        if old and not present <= old:
            raise DimMismatch("labelled instance with a class outside the old classes")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]

    @property
    def labelled(self):
        return self.labels >= 0

    @property
    def labelled_classes(self):
        return tuple(int(c) for c in np.unique(self.labels[self.labels >= 0]))


def make_dataset(X, labels, ids=None, old_classes=(), new_classes=()):
    X = np.ascontiguousarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    ids = np.arange(len(X), dtype=np.int64) if ids is None else np.asarray(ids, dtype=np.int64)
    if not old_classes:
        old_classes = tuple(int(c) for c in np.unique(labels[labels >= 0]))
    return FeatureDataset(X, labels, ids, tuple(old_classes), tuple(new_classes))


# --- GPCF -------------------------------------------------------------------

def encode_gpcf(X, labels):
    X = np.ascontiguousarray(X, dtype="<f8")
    n, d = X.shape
    return HEADER.pack(MAGIC, VERSION, n, d) + X.tobytes() + np.asarray(labels, dtype="<i8").tobytes()


def decode_gpcf(buf):
    if len(buf) < HEADER.size:
        raise ParseError("truncated GPCF header", offset=len(buf))
    magic, version, n, d = HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise ParseError("bad magic bytes", offset=0)
    if version != VERSION:
        raise ParseError(f"unsupported GPCF version {version}", offset=4)
    body = n * d * 8
    need = HEADER.size + body + n * 8
    if len(buf) != need:
        raise ParseError(f"GPCF size {len(buf)} does not match header (expected {need})",
                         offset=min(len(buf), need))
    X = np.frombuffer(buf, dtype="<f8", count=n * d, offset=HEADER.size).reshape(n, d)
    labels = np.frombuffer(buf, dtype="<i8", count=n, offset=HEADER.size + body)
    return X.astype(np.float64), labels.astype(np.int64)


# --- CSV --------------------------------------------------------------------

def encode_csv(X, labels, ids):
    X = np.asarray(X, dtype=float)
    out = io.StringIO()
    d = X.shape[1]
    out.write(",".join(["id", "label"] + [f"f{j}" for j in range(d)]) + "\n")
    for i in range(len(X)):
        lab = "" if labels[i] < 0 else str(int(labels[i]))
        # 17 significant digits round-trip every double
        row = [str(int(ids[i])), lab] + [format(float(v), ".17g") for v in X[i]]
        out.write(",".join(row) + "\n")
    return out.getvalue()


def decode_csv(text):
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty CSV", line=1) from None
    if header[:2] != ["id", "label"]:
        raise ParseError("header must start with 'id,label'", line=1)
    d = len(header) - 2
    if header[2:] != [f"f{j}" for j in range(d)]:
        raise ParseError("feature columns must be named f0..f{d-1}", line=1)
    ids, labels, rows = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != d + 2:
            raise DimMismatch(f"line {lineno}: expected {d + 2} fields, got {len(row)}")
        try:
            ids.append(int(row[0]))
            labels.append(int(row[1]) if row[1].strip() else -1)
            rows.append([float(v) for v in row[2:]])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
    if not rows:
        raise ParseError("CSV has no data rows", line=2)
    return np.array(rows, dtype=np.float64).reshape(len(rows), d), np.array(labels, dtype=np.int64), np.array(ids, dtype=np.int64)


def _format_of(path, fmt):
    if fmt is not None:
        return fmt
    ext = os.path.splitext(str(path))[1].lower().lstrip(".")
    if ext not in ("csv", "gpcf"):
        raise ParseError(f"cannot infer format from extension of {path}")
    return ext


def load_features(path, fmt=None):
    fmt = _format_of(path, fmt)
    if fmt == "gpcf":
        with open(path, "rb") as fh:
            X, labels = decode_gpcf(fh.read())
        return make_dataset(X, labels)
    with open(path, encoding="utf-8", newline="") as fh:
        X, labels, ids = decode_csv(fh.read())
    return make_dataset(X, labels, ids)


def save_features(ds, path, fmt=None):
    fmt = _format_of(path, fmt)
    if fmt == "gpcf":
        if not np.array_equal(ds.ids, np.arange(ds.n)):
            raise DimMismatch("GPCF stores ids implicitly as row order 0..N-1")
        with open(path, "wb") as fh:
            fh.write(encode_gpcf(ds.X, ds.labels))
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(encode_csv(ds.X, ds.labels, ds.ids))


def truth_path(path):
    root, ext = os.path.splitext(str(path))
    return f"{root}.truth{ext}"


def save_truth(ids, truth, path, fmt=None):
    """Ground-truth sidecar in the dataset's format (no feature columns)."""
    fmt = _format_of(path, fmt)
    empty = np.zeros((len(truth), 0))
    if fmt == "gpcf":
        with open(path, "wb") as fh:
            fh.write(encode_gpcf(empty, truth))
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(encode_csv(empty, truth, ids))


def load_truth(path, fmt=None):
    """Returns (ids, true labels)."""
    ds = load_features(path, fmt) if _format_of(path, fmt) == "csv" else None
    if ds is not None:
        return ds.ids, ds.labels
    with open(path, "rb") as fh:
        X, labels = decode_gpcf(fh.read())
    return np.arange(len(labels), dtype=np.int64), labels


# --- split protocol and generators -----------------------------------------

def make_split(X, truth, old_classes, labelled_fraction=0.5, seed=0, ids=None):
    """Keep labels on floor(fraction * n_c) random instances of every old
    class; everything else is unlabelled."""
    truth = np.asarray(truth, dtype=np.int64)
    rng = np.random.default_rng(seed)
    labels = np.full(len(truth), -1, dtype=np.int64)
    for c in sorted(old_classes):
        idx = np.flatnonzero(truth == c)
        k = int(math.floor(labelled_fraction * len(idx) + 1e-9))
        chosen = rng.choice(idx, size=k, replace=False) if k else np.empty(0, np.int64)
        labels[chosen] = c
    all_classes = set(int(c) for c in np.unique(truth))
    new = tuple(sorted(all_classes - set(old_classes)))
    return make_dataset(X, labels, ids, tuple(sorted(old_classes)), new)


@dataclass(frozen=True)
class SynthSpec:
    k_true: int = 10
    d: int = 2
    per_class: int = 200
    center_scale: float = 100.0
    sigma: float = 1.0
    kl: int = 6
    labelled_fraction: float = 0.5
    seed: int = 0
    min_separation: float = 0.0  # in units of sigma; 0 disables the check
    intrinsic_dim: int | None = None  # embed a lower-dimensional mixture in d dims
    noise: float = 0.0  # isotropic noise added in the ambient space

    def __post_init__(self):
        if not 0 <= self.kl <= self.k_true:
            raise ValueError("kl must lie in [0, k_true]")
        if not 0 <= self.labelled_fraction <= 1:
            raise ValueError("labelled_fraction must lie in [0, 1]")


def _draw_centers(spec, dim, rng):
    for _ in range(10000):
        C = rng.uniform(0.0, spec.center_scale, size=(spec.k_true, dim))
        if spec.min_separation <= 0 or spec.k_true < 2:
            return C
        D = np.sqrt(np.sum((C[:, None] - C[None]) ** 2, axis=-1))
        np.fill_diagonal(D, np.inf)
        if D.min() >= spec.min_separation * spec.sigma:
            return C
    raise ValueError("could not place centers with the requested separation")


def gen_synth(spec):
    """Isotropic Gaussian blobs; returns (dataset, ground-truth labels).

    Classes 0..kl-1 are the old (labelled) classes.
    """
    rng = np.random.default_rng(spec.seed)
    dim = spec.intrinsic_dim or spec.d
    C = _draw_centers(spec, dim, rng)
    truth = np.repeat(np.arange(spec.k_true, dtype=np.int64), spec.per_class)
    X = C[truth] + spec.sigma * rng.standard_normal((len(truth), dim))
    if spec.intrinsic_dim:
        basis, _ = np.linalg.qr(rng.standard_normal((spec.d, dim)))
        X = X @ basis.T
    if spec.noise > 0:
        X = X + spec.noise * rng.standard_normal(X.shape)
    ds = make_split(X, truth, tuple(range(spec.kl)), spec.labelled_fraction, seed=int(rng.integers(2**63 - 1)))
    return ds, truth


def partial_overlap_split(ds, truth, overlap, seed=0):
    """Keep unlabelled old-class instances from only ``overlap`` of the old
    classes; returns (dataset, truth) restricted accordingly."""
    old = sorted(ds.old_classes)
    if overlap > len(old) or overlap < 0:
        raise OverlapTooLarge(f"overlap {overlap} exceeds the {len(old)} old classes")
    rng = np.random.default_rng(seed)
    kept = set(sorted(rng.choice(old, size=overlap, replace=False).tolist())) if overlap else set()
    truth = np.asarray(truth, dtype=np.int64)
    unl_old = (~ds.labelled) & np.isin(truth, old)
    drop = unl_old & ~np.isin(truth, sorted(kept))
    keep = ~drop
    out = FeatureDataset(ds.X[keep], ds.labels[keep], ds.ids[keep], ds.old_classes, ds.new_classes)
    return out, truth[keep]


def corrupt(X, fraction=0.5, seed=0):
    """Replace each feature entry, with probability ``fraction``, by a draw
    from a Gaussian matching that feature's mean and spread."""
    X = np.asarray(X, dtype=float)
    rng = np.random.default_rng(seed)
    mask = rng.random(X.shape) < fraction
    noise = X.mean(axis=0) + X.std(axis=0) * rng.standard_normal(X.shape)
    return np.where(mask, noise, X)
