import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import best_kmeans_inertia, brute_force_acc
from gpc.errors import InfeasibleK, TooFewPoints
from gpc.sskmeans import LabelConstraints, lloyd, ss_kmeans, subcluster


def blobs(rng, centers, per, sigma=1.0):
    centers = np.asarray(centers, dtype=float)
    X = np.vstack([c + sigma * rng.normal(size=(per, centers.shape[1])) for c in centers])
    y = np.repeat(np.arange(len(centers)), per)
    return X, y


def check_constraints(cons, assignment):
    lab = cons.labelled
    for c in cons.classes:
        assert len(np.unique(assignment[cons.labels == c])) == 1
    owner = {c: assignment[cons.labels == c][0] for c in cons.classes}
    assert len(set(owner.values())) == len(owner)
    return lab


class TestSsKmeans:
    def test_fully_labelled(self, rng):
        X, y = blobs(rng, [[0, 0], [5, 5], [0, 9]], 10)
        res = ss_kmeans(X, LabelConstraints.from_labels(y), 3)
        np.testing.assert_array_equal(res.assignment, y)
        for c in range(3):
            np.testing.assert_allclose(res.centers[c], X[y == c].mean(axis=0))

    def test_single_cluster(self, rng):
        X = rng.normal(size=(30, 3))
        res = ss_kmeans(X, LabelConstraints.none(30), 1)
        np.testing.assert_allclose(res.centers[0], X.mean(axis=0))
        assert res.inertia == pytest.approx(np.sum((X - X.mean(axis=0)) ** 2))

    def test_four_blobs_two_labelled(self):
        rng = np.random.default_rng(11)
        X, y = blobs(rng, [[0, 0], [20, 0], [0, 20], [20, 20]], 40)
        labels = np.where((y < 2) & (rng.random(len(y)) < 0.3), y, -1)
        res = ss_kmeans(X, LabelConstraints.from_labels(labels), 4, seed=5)
        # nearest true centre oracle
        truth = np.argmin(((X[:, None] - np.array([[0, 0], [20, 0], [0, 20], [20, 20]])) ** 2).sum(-1), axis=1)
        assert brute_force_acc(truth, res.assignment) == 1.0

    def test_infeasible(self, rng):
        X = rng.normal(size=(5, 2))
        cons = LabelConstraints.from_labels([0, 1, 2, -1, -1])
        with pytest.raises(InfeasibleK):
            ss_kmeans(X, cons, 2)
        with pytest.raises(InfeasibleK):
            ss_kmeans(X, cons, 6)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(1, 4), st.integers(0, 3))
    def test_constraints_always_hold(self, seed, kl, extra):
        rng = np.random.default_rng(seed)
        n = 40
        X = rng.normal(size=(n, 2)) * 3
        labels = np.full(n, -1)
        for c in range(kl):
            idx = rng.choice(n, size=3, replace=False)
            labels[idx[labels[idx] < 0]] = c
        cons = LabelConstraints.from_labels(labels)
        res = ss_kmeans(X, cons, cons.n_classes + extra, seed=seed)
        check_constraints(cons, res.assignment)
        assert set(np.unique(res.assignment)) <= set(range(cons.n_classes + extra))
        assert res.inertia == pytest.approx(np.sum((X - res.centers[res.assignment]) ** 2))

    def test_inertia_non_increasing(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            X = rng.normal(size=(200, 2)) + rng.integers(0, 4, size=(200, 1)) * 3
            labels = np.where(rng.random(200) < 0.1, rng.integers(0, 2, size=200), -1)
            res = ss_kmeans(X, LabelConstraints.from_labels(labels), 5, seed=seed)
            assert np.all(np.diff(res.inertia_trace) <= 1e-9 * res.inertia_trace[0])

    def test_deterministic(self, rng):
        X = rng.normal(size=(100, 3))
        cons = LabelConstraints.from_labels(np.r_[np.zeros(5, int), np.ones(5, int), -np.ones(90, int)])
        a, b = ss_kmeans(X, cons, 6, seed=3), ss_kmeans(X, cons, 6, seed=3)
        np.testing.assert_array_equal(a.assignment, b.assignment)
        np.testing.assert_array_equal(a.centers, b.centers)

    def test_exhaustive_optimum_rate(self):
        rng = np.random.default_rng(99)
        hits = 0
        for _ in range(100):
            n = int(rng.integers(4, 9))
            k = int(rng.integers(2, 4))
            X = rng.normal(size=(n, 2))
            res = ss_kmeans(X, LabelConstraints.none(n), k, seed=int(rng.integers(1 << 30)))
            hits += res.inertia <= best_kmeans_inertia(X, k) + 1e-9
        print(f"exhaustive optimum reached on {hits}/100 instances")
        assert hits >= 95

    def test_empty_cluster_reseeded(self):
        X = np.array([[0.0], [0.1], [10.0], [10.1]])
        centers, assignment, *_ = lloyd(X, np.array([[0.0], [10.0], [100.0]]), np.full(4, -1))
        assert len(np.unique(assignment)) == 3


class TestSubcluster:
    def test_two_points(self):
        s = subcluster(np.array([[0.0, 0.0], [1.0, 1.0]]))
        np.testing.assert_array_equal(np.sort(s.assignment), [0, 1])
        np.testing.assert_allclose(s.weights, [0.5, 0.5])

    def test_bimodal(self, rng):
        Z = np.r_[-3 + 0.05 * rng.normal(size=20), 3 + 0.05 * rng.normal(size=20)][:, None]
        s = subcluster(Z, seed=1)
        np.testing.assert_allclose(np.sort(s.centers[:, 0]), [-3, 3], atol=0.2)
        assert s.weights.sum() == pytest.approx(1.0)

    def test_identical_points(self):
        Z = np.full((6, 2), 4.5)
        s = subcluster(Z, seed=3)
        np.testing.assert_array_equal(s.assignment, 0)
        np.testing.assert_allclose(s.centers, [[4.5, 4.5], [4.5, 4.5]])
        np.testing.assert_array_equal(s.weights, [1.0, 0.0])

    def test_too_few(self):
        with pytest.raises(TooFewPoints):
            subcluster(np.zeros((1, 2)))

    def test_locked_points_stay_together(self, rng):
        Z = np.r_[rng.normal(size=(10, 2)), rng.normal(size=(10, 2)) + 8]
        locked = np.zeros(20, bool)
        locked[[0, 15]] = True
        s = subcluster(Z, seed=0, locked=locked)
        assert s.assignment[0] == s.assignment[15] == 0

    def test_diag_mode(self, rng):
        Z = rng.normal(size=(50, 3)) @ np.array([[1, 0.5, 0], [0, 1, 0.5], [0, 0, 1.0]])
        s = subcluster(Z, covariance_mode="diag")
        for C in s.covs:
            np.testing.assert_array_equal(C, np.diag(np.diag(C)))
