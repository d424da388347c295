"""Tests for rii.region."""

import json

import numpy as np
import pytest

from rii.errors import DimensionMismatchError, InvalidArgumentError, NoValidThresholdError
from rii.estimators import fit_ols, predict
from rii.region import (
    Boundedness,
    Dataset,
    PredictionSet,
    RegionSpec,
    ResidualIntervalSet,
    boundedness_necessary_check,
    build_region,
    count_hits,
    default_big_m,
    membership,
    residual_intervals,
    split_dataset,
)
from rii.synth import GroundTruth, NoiseSpec, sample_dataset, sample_theta_star


@pytest.fixture
def three_intervals():
    return ResidualIntervalSet(np.ones((3, 1)), [0.0, 2.0, 0.5], [1.0, 3.0, 2.5])


def _dataset(n, d, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(rng.random((n, d)), rng.normal(size=n))


class TestDataset:
    def test_shapes(self):
        data = _dataset(5, 2)
        assert (data.n, data.d) == (5, 2)

    def test_rejects_row_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            Dataset(np.zeros((3, 2)), np.zeros(2))

    @pytest.mark.parametrize("bad", [np.nan, np.inf])
    def test_rejects_non_finite(self, bad):
        x = np.zeros((2, 1))
        x[0, 0] = bad
        with pytest.raises(InvalidArgumentError):
            Dataset(x, np.zeros(2))

    def test_immutable(self):
        data = _dataset(3, 1)
        with pytest.raises(ValueError):
            data.x[0, 0] = 1.0

    def test_csv_round_trip(self, tmp_path):
        data = _dataset(7, 3)
        path = tmp_path / "d.csv"
        data.to_csv(path)
        assert path.read_text().splitlines()[0] == "x1,x2,x3,y"
        back = Dataset.from_csv(path)
        np.testing.assert_array_equal(back.x, data.x)
        np.testing.assert_array_equal(back.y, data.y)

    def test_csv_requires_header(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1,2\n3,4\n")
        with pytest.raises(InvalidArgumentError):
            Dataset.from_csv(path)


class TestSplit:
    def test_full_split(self):
        data = _dataset(10, 2)
        test, train = split_dataset(data, 10, seed=0)
        assert test.n == 10 and train.n == 0

    def test_partition(self):
        data = _dataset(99, 3)
        test, train = split_dataset(data, 39, seed=7)
        assert (test.n, train.n) == (39, 60)
        rows = lambda ds: sorted(map(tuple, np.column_stack([ds.x, ds.y])))
        assert sorted(rows(test) + rows(train)) == rows(data)

    def test_deterministic(self):
        data = _dataset(20, 2)
        a, _ = split_dataset(data, 5, seed=3)
        b, _ = split_dataset(data, 5, seed=3)
        np.testing.assert_array_equal(a.x, b.x)

    @pytest.mark.parametrize("n_te", [0, 11])
    def test_bad_size(self, n_te):
        with pytest.raises(InvalidArgumentError):
            split_dataset(_dataset(10, 1), n_te, seed=0)


class TestResidualIntervals:
    def _make(self, y, y_hat):
        test = Dataset(np.ones((len(y), 1)), y)
        return residual_intervals(test, PredictionSet(y_hat))

    def test_order_swap(self):
        iv = self._make([3.0], [1.0])
        assert (iv.lo[0], iv.hi[0]) == (1.0, 3.0)

    def test_degenerate(self):
        iv = self._make([2.0], [2.0])
        assert (iv.lo[0], iv.hi[0]) == (2.0, 2.0)

    def test_elementwise(self):
        iv = self._make([0.5, -1.0], [0.7, -3.0])
        np.testing.assert_array_equal(iv.lo, [0.5, -3.0])
        np.testing.assert_array_equal(iv.hi, [0.7, -1.0])

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            self._make([1.0, 2.0], [1.0])

    def test_non_finite_prediction(self):
        with pytest.raises(InvalidArgumentError):
            self._make([1.0], [np.nan])

    def test_inverted_interval_rejected(self):
        with pytest.raises(InvalidArgumentError):
            ResidualIntervalSet(np.ones((1, 1)), [2.0], [1.0])


class TestCountHits:
    def test_hand_example(self, three_intervals):
        assert count_hits(three_intervals, [2.0]) == 2

    def test_all_contain_zero(self):
        rng = np.random.default_rng(0)
        iv = ResidualIntervalSet(rng.normal(size=(6, 3)), -rng.random(6), rng.random(6))
        assert count_hits(iv, np.zeros(3)) == 6

    def test_closed_boundary(self, three_intervals):
        # theta @ x equal to hi (3.0) and lo (0.0, 2.0) both count.
        assert count_hits(three_intervals, [3.0]) == 1
        assert count_hits(three_intervals, [0.0]) == 1

    def test_dimension_mismatch(self, three_intervals):
        with pytest.raises(DimensionMismatchError):
            count_hits(three_intervals, [1.0, 2.0])

    def test_permutation_invariant(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(30, 2))
        c = rng.normal(size=30)
        iv = ResidualIntervalSet(x, c - 1, c + 1)
        perm = rng.permutation(30)
        ivp = ResidualIntervalSet(x[perm], (c - 1)[perm], (c + 1)[perm])
        for theta in rng.normal(size=(20, 2)):
            assert count_hits(iv, theta) == count_hits(ivp, theta)

    def test_lemma_hit_rate(self):
        # Median-zero noise and a predictor fit on separate data: each test
        # interval holds theta_star @ x with probability at least 1/2.
        truth = GroundTruth(np.array([1.0, -2.0]), noise=NoiseSpec("additive_gaussian", 0.5))
        train = sample_dataset(truth, 60, seed=1)
        fit = fit_ols(train)
        test = sample_dataset(truth, 100_000, seed=2)
        iv = residual_intervals(test, predict(fit, test.x))
        n = test.n
        rate = count_hits(iv, truth.theta_star) / n
        assert rate >= 0.5 - 3 * np.sqrt(0.25 / n)


class TestRegionSpec:
    def test_membership(self, three_intervals):
        assert membership(RegionSpec(three_intervals, 2, 0.1, 0.5), [2.0])
        assert not membership(RegionSpec(three_intervals, 3, 0.1, 0.5), [2.0])

    @pytest.mark.parametrize("k", [0, 4])
    def test_k_range(self, three_intervals, k):
        with pytest.raises(InvalidArgumentError):
            RegionSpec(three_intervals, k, 0.1, 0.5)

    def test_big_m_must_exceed_endpoints(self, three_intervals):
        with pytest.raises(InvalidArgumentError):
            RegionSpec(three_intervals, 1, 0.1, 0.5, big_m=3.0)

    def test_json_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(4)
        c = rng.normal(size=8) * 1e3
        iv = ResidualIntervalSet(rng.normal(size=(8, 3)), c - np.pi, c + np.e)
        region = build_region(iv, 0.1, 0.5, k=3)
        path = tmp_path / "r.json"
        region.save(path)
        back = RegionSpec.load(path)
        for name in ("x_te", "lo", "hi"):
            np.testing.assert_array_equal(getattr(back.intervals, name), getattr(iv, name))
        assert (back.k, back.alpha, back.b, back.big_m) == (3, 0.1, 0.5, region.big_m)
        doc = json.loads(path.read_text())
        assert set(doc) == {"d", "n_te", "k", "alpha", "b", "big_m", "points"}

    def test_malformed_json(self):
        with pytest.raises(InvalidArgumentError):
            RegionSpec.from_json('{"d": 1}')
        with pytest.raises(InvalidArgumentError):
            RegionSpec.from_json("not json")

    def test_build_region_picks_k_alpha(self):
        iv = ResidualIntervalSet(np.ones((39, 1)), np.zeros(39), np.ones(39))
        region = build_region(iv, 0.1, 0.5)
        assert region.k == 16
        assert region.guaranteed_coverage == pytest.approx(0.9002, abs=5e-4)

    def test_build_region_without_threshold(self):
        iv = ResidualIntervalSet(np.ones((1, 1)), [0.0], [1.0])
        with pytest.raises(NoValidThresholdError):
            build_region(iv, 0.01, 0.5)

    def test_default_big_m(self):
        small = ResidualIntervalSet(np.ones((1, 1)), [-2.0], [3.0])
        large = ResidualIntervalSet(np.ones((1, 1)), [-200.0], [30.0])
        assert default_big_m(small) == 50.0
        assert default_big_m(large) == 2000.0

    def test_membership_frequency(self):
        # theta_star lies in the region in at least 90% of trials (minus MC slack).
        trials, hits = 400, 0
        for t in range(trials):
            theta = sample_theta_star(3, 11, t)
            truth = GroundTruth(theta)
            data = sample_dataset(truth, 99, 11, t)
            test, train = split_dataset(data, 39, t)
            iv = residual_intervals(test, predict(fit_ols(train), test.x))
            hits += membership(build_region(iv, 0.1, 0.5), theta)
        assert hits / trials >= 0.9 - 3 * np.sqrt(0.09 / trials)


class TestBoundedness:
    def test_k_below_d(self):
        iv = ResidualIntervalSet(np.eye(3), np.zeros(3), np.ones(3))
        assert boundedness_necessary_check(RegionSpec(iv, 2, 0.1, 0.5)) \
            is Boundedness.SURELY_UNBOUNDED_OR_EMPTY

    def test_rank_met(self):
        iv = ResidualIntervalSet(np.ones((1, 1)), [0.0], [1.0])
        assert boundedness_necessary_check(RegionSpec(iv, 1, 0.1, 0.5)) is Boundedness.UNDETERMINED

    def test_rank_deficient(self):
        x = np.outer([1.0, 2.0, -1.0], [1.0, 1.0])
        iv = ResidualIntervalSet(x, np.zeros(3), np.ones(3))
        for k in (1, 2, 3):
            assert boundedness_necessary_check(RegionSpec(iv, k, 0.1, 0.5)) \
                is Boundedness.SURELY_UNBOUNDED_OR_EMPTY
