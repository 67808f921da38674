import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from gpc.datasetio import (
    SynthSpec, corrupt, decode_csv, decode_gpcf, encode_csv, encode_gpcf, gen_synth, load_features,
    load_truth, make_dataset, make_split, partial_overlap_split, save_features, save_truth, truth_path,
)
from gpc.errors import DimMismatch, OverlapTooLarge, ParseError


def test_csv_with_unlabelled_row():
    X, labels, ids = decode_csv("id,label,f0,f1\n0,1,0.5,1\n1,,2,3\n2,0,-1,4e-3\n")
    assert X.shape == (3, 2)
    np.testing.assert_array_equal(labels, [1, -1, 0])
    np.testing.assert_array_equal(ids, [0, 1, 2])


def test_csv_errors():
    with pytest.raises(DimMismatch):
        decode_csv("id,label,f0,f1\n0,1,0.5\n")
    with pytest.raises(ParseError) as info:
        decode_csv("id,label,f0\n0,1,0.5\n1,x,2\n")
    assert info.value.line == 3
    with pytest.raises(ParseError):
        decode_csv("label,id,f0\n")


def test_gpcf_layout():
    buf = encode_gpcf(np.array([[1.0, 2.0]]), [-1])
    assert buf[:4] == b"GPCF"
    assert int.from_bytes(buf[4:8], "little") == 1
    assert int.from_bytes(buf[8:16], "little") == 1
    assert int.from_bytes(buf[16:24], "little") == 2
    assert np.frombuffer(buf[24:40], "<f8").tolist() == [1.0, 2.0]
    assert int.from_bytes(buf[40:48], "little", signed=True) == -1
    assert len(buf) == 48


def test_gpcf_errors():
    buf = encode_gpcf(np.zeros((2, 2)), [0, 1])
    with pytest.raises(ParseError):
        decode_gpcf(b"XPCF" + buf[4:])
    with pytest.raises(ParseError) as info:
        decode_gpcf(buf[:-3])
    assert info.value.offset is not None
    with pytest.raises(ParseError):
        decode_gpcf(buf[:10])


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 4)),
              elements=st.floats(allow_nan=False, allow_infinity=False, width=64)))
def test_round_trips(X):
    labels = np.arange(len(X)) % 3 - 1
    Xg, lg = decode_gpcf(encode_gpcf(X, labels))
    assert Xg.tobytes() == np.ascontiguousarray(X).tobytes()
    np.testing.assert_array_equal(lg, labels)
    Xc, lc, ids = decode_csv(encode_csv(X, labels, np.arange(len(X))))
    np.testing.assert_array_equal(Xc, X)
    np.testing.assert_array_equal(lc, labels)


def test_file_round_trip_and_cross_format(tmp_path, rng):
    ds = make_dataset(rng.normal(size=(20, 3)), np.where(rng.random(20) < 0.5, rng.integers(0, 3, 20), -1))
    g, c = tmp_path / "d.gpcf", tmp_path / "d.csv"
    save_features(ds, g)
    save_features(ds, c)
    a, b = load_features(g), load_features(c)
    save_features(a, tmp_path / "again.gpcf")
    assert g.read_bytes() == (tmp_path / "again.gpcf").read_bytes()
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.labels, b.labels)
    np.testing.assert_array_equal(a.ids, b.ids)
    assert a.old_classes == b.old_classes


def test_gpcf_requires_row_ids(tmp_path):
    ds = make_dataset(np.zeros((2, 1)), [-1, -1], ids=[5, 9])
    with pytest.raises(DimMismatch):
        save_features(ds, tmp_path / "x.gpcf")


def test_truth_sidecar(tmp_path):
    path = tmp_path / "data.csv"
    assert truth_path(path).endswith("data.truth.csv")
    save_truth(np.array([3, 4, 5]), np.array([2, 0, 1]), truth_path(path))
    ids, truth = load_truth(truth_path(path))
    assert ids.tolist() == [3, 4, 5] and truth.tolist() == [2, 0, 1]
    save_truth(np.arange(3), np.array([2, 0, 1]), tmp_path / "t.gpcf")
    assert load_truth(tmp_path / "t.gpcf")[1].tolist() == [2, 0, 1]


def test_dataset_validation():
    with pytest.raises(DimMismatch):
        make_dataset(np.zeros((2, 2)), [0, 0], ids=[1, 1])
    with pytest.raises(DimMismatch):
        make_dataset(np.zeros((2, 2)), [0, 3], old_classes=(0, 1))


class TestSplit:
    truth = np.repeat(np.arange(4), 100)

    def test_half(self):
        ds = make_split(np.zeros((400, 1)), self.truth, (0, 1), 0.5, seed=3)
        for c in (0, 1):
            assert np.sum(ds.labels == c) == 50
        assert np.all(ds.labels[self.truth >= 2] == -1)
        assert ds.new_classes == (2, 3)

    def test_full_and_floor(self):
        ds = make_split(np.zeros((400, 1)), self.truth, (0,), 1.0)
        assert np.all(ds.labels[self.truth == 0] == 0)
        ds = make_split(np.zeros((400, 1)), self.truth, (0,), 0.333)
        assert np.sum(ds.labels == 0) == 33

    def test_partition_and_determinism(self, rng):
        X = rng.normal(size=(400, 2))
        a = make_split(X, self.truth, (0, 1, 2), 0.5, seed=9)
        b = make_split(X, self.truth, (0, 1, 2), 0.5, seed=9)
        np.testing.assert_array_equal(a.labels, b.labels)
        np.testing.assert_array_equal(a.X, X)
        # D^l and D^u partition the ids
        assert set(a.ids[a.labelled]) | set(a.ids[~a.labelled]) == set(range(400))
        assert not set(a.ids[a.labelled]) & set(a.ids[~a.labelled])


class TestSynth:
    def test_zero_sigma(self):
        ds, truth = gen_synth(SynthSpec(k_true=3, d=2, per_class=5, sigma=0.0, kl=2))
        for c in range(3):
            assert len(np.unique(ds.X[truth == c], axis=0)) == 1

    def test_deterministic(self):
        spec = SynthSpec(k_true=4, d=3, per_class=20, kl=2, seed=11)
        a, b = gen_synth(spec), gen_synth(spec)
        assert encode_gpcf(a[0].X, a[0].labels) == encode_gpcf(b[0].X, b[0].labels)

    def test_nearest_center(self):
        spec = SynthSpec(k_true=10, d=2, per_class=100, kl=6, center_scale=300, seed=4)
        ds, truth = gen_synth(spec)
        # the generator's first draw is its centre set when no separation is enforced
        C = np.random.default_rng(spec.seed).uniform(0.0, spec.center_scale, size=(10, 2))
        D = np.sqrt(((C[:, None] - C[None]) ** 2).sum(-1))
        np.fill_diagonal(D, np.inf)
        assert D.min() > 10 * spec.sigma
        nearest = np.argmin(((ds.X[:, None] - C[None]) ** 2).sum(-1), axis=1)
        np.testing.assert_array_equal(nearest, truth)

    def test_intrinsic(self):
        ds, _ = gen_synth(SynthSpec(k_true=5, d=16, per_class=30, kl=2, intrinsic_dim=3))
        assert ds.dim == 16
        assert np.linalg.matrix_rank(ds.X - ds.X.mean(axis=0), tol=1e-8) == 3

    def test_labelled_classes(self):
        ds, truth = gen_synth(SynthSpec(k_true=5, d=2, per_class=40, kl=3))
        assert ds.labelled_classes == (0, 1, 2)
        assert ds.new_classes == (3, 4)
        assert np.all(truth[ds.labelled] == ds.labels[ds.labelled])


class TestOverlap:
    def setup_method(self):
        self.ds, self.truth = gen_synth(SynthSpec(k_true=6, d=2, per_class=20, kl=4))

    def test_full_overlap_is_identity(self):
        ds, truth = partial_overlap_split(self.ds, self.truth, 4)
        np.testing.assert_array_equal(ds.ids, self.ds.ids)

    def test_overlap_one(self):
        ds, truth = partial_overlap_split(self.ds, self.truth, 1, seed=2)
        unl = ~ds.labelled
        old_unl = np.unique(truth[unl & np.isin(truth, self.ds.old_classes)])
        assert len(old_unl) == 1
        # recount: labelled instances untouched, new classes complete
        assert np.sum(ds.labelled) == np.sum(self.ds.labelled)
        for c in self.ds.new_classes:
            assert np.sum(truth == c) == 20
        assert np.sum(truth[unl] == old_unl[0]) == 10

    def test_too_large(self):
        with pytest.raises(OverlapTooLarge):
            partial_overlap_split(self.ds, self.truth, 5)


def test_corrupt_fraction(rng):
    X = rng.normal(size=(2000, 4)) + 10
    Y = corrupt(X, 0.5, seed=1)
    assert np.mean(Y != X) == pytest.approx(0.5, abs=0.02)
    assert np.array_equal(corrupt(X, 0.0), X)
