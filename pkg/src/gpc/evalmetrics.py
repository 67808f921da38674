"""Clustering accuracy under the optimal cluster-to-class matching."""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class EvalReport:
    acc_all: float
    acc_old: float
    acc_new: float
    matching: dict  # predicted cluster -> true class
    k_true: int
    k_est: int
    m_all: int
    m_old: int
    m_new: int
    correct_all: int
    correct_old: int
    correct_new: int

    def to_dict(self):
        return {
            "acc_all": self.acc_all, "acc_old": self.acc_old, "acc_new": self.acc_new,
            "matching": {str(k): v for k, v in sorted(self.matching.items())},
            "k_true": self.k_true, "k_est": self.k_est, "k_error": k_error(self.k_est, self.k_true),
            "m_all": self.m_all, "m_old": self.m_old, "m_new": self.m_new,
            "correct_all": self.correct_all, "correct_old": self.correct_old,
            "correct_new": self.correct_new,
        }


def contingency(y_true, y_pred):
    """Square count matrix (clusters x classes) padded with zeros, plus the
    cluster and class values indexing its rows and columns."""
    clusters, pi = np.unique(y_pred, return_inverse=True)
    classes, ti = np.unique(y_true, return_inverse=True)
    size = max(len(clusters), len(classes))
    W = np.zeros((size, size), dtype=np.int64)
    np.add.at(W, (pi, ti), 1)
    return W, clusters, classes


def _ratio(num, den):
    return num / den if den else 0.0


def hungarian_acc(y_true, y_pred, old_classes=()):
    """Accuracy over all, old-class and new-class instances sharing one
    global maximum-weight matching."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if len(y_true) != len(y_pred) or len(y_true) == 0:
        raise ValueError("y_true and y_pred must be nonempty and equally long")
    W, clusters, classes = contingency(y_true, y_pred)
    rows, cols = linear_sum_assignment(W, maximize=True)
    matching = {
        int(clusters[r]): int(classes[c])
        for r, c in zip(rows, cols)
        if r < len(clusters) and c < len(classes)
    }
    mapped = np.array([matching.get(int(p), None) for p in y_pred], dtype=object)
    hit = np.array([m is not None and m == t for m, t in zip(mapped, y_true)], dtype=bool)
    old = np.isin(y_true, list(old_classes))
    c_all, c_old = int(hit.sum()), int(hit[old].sum())
    m_all, m_old = len(y_true), int(old.sum())
    return EvalReport(
        acc_all=_ratio(c_all, m_all), acc_old=_ratio(c_old, m_old),
        acc_new=_ratio(c_all - c_old, m_all - m_old), matching=matching,
        k_true=len(classes), k_est=len(clusters), m_all=m_all, m_old=m_old,
        m_new=m_all - m_old, correct_all=c_all, correct_old=c_old, correct_new=c_all - c_old,
    )


def k_error(k_est, k_true):
    return int(k_est) - int(k_true)
