"""Tests for the exact arrangement-vertex engine."""

import numpy as np
import pytest
from scipy.optimize import Bounds, LinearConstraint, milp

from oracles import random_region, rii_exhaustive
from rii.arrangement import candidate_count, is_applicable, member_vertices
from rii.estimators import fit_ols, predict
from rii.milp.encode import encode_region, solve_region
from rii.milp.model import Status
from rii.region import (
    RegionSpec,
    ResidualIntervalSet,
    build_region,
    count_hits,
    residual_intervals,
    split_dataset,
)
from rii.synth import GroundTruth, NoiseSpec, sample_dataset, sample_theta_star


def _pipeline_region(seed, noise="additive_gaussian", d=3):
    theta = sample_theta_star(d, seed)
    data = sample_dataset(GroundTruth(theta, noise=NoiseSpec(noise)), 99, seed)
    test, train = split_dataset(data, 39, seed)
    iv = residual_intervals(test, predict(fit_ols(train), test.x))
    return build_region(iv, 0.1, 0.5, k=16)


def _highs(region, c, sense, big_m):
    model = encode_region(region, c, sense, big_m=big_m)
    sign = 1.0 if sense == "minimize" else -1.0
    lo = np.where(np.array(model.relations) == "<=", -np.inf, model.rhs)
    hi = np.where(np.array(model.relations) == ">=", np.inf, model.rhs)
    res = milp(sign * model.objective, constraints=LinearConstraint(model.A, lo, hi),
               integrality=model.binary_mask.astype(int), bounds=Bounds(model.lower, model.upper),
               options={"mip_rel_gap": 0.0})
    return res


class TestApplicability:
    def test_candidate_count(self):
        assert candidate_count(39, 3) == 9139 * 8

    def test_k_below_d(self):
        iv = ResidualIntervalSet(np.eye(3), np.zeros(3), np.ones(3))
        region = RegionSpec(iv, 2, 0.1, 0.5)
        assert not is_applicable(region)
        assert member_vertices(region) is None

    def test_dependent_inputs(self):
        x = np.array([[1.0, 1.0], [2.0, 2.0], [1.0, 0.0]])
        region = RegionSpec(ResidualIntervalSet(x, np.zeros(3), np.ones(3)), 2, 0.1, 0.5)
        assert member_vertices(region) is None

    def test_zero_input(self):
        x = np.array([[0.0], [1.0]])
        region = RegionSpec(ResidualIntervalSet(x, np.zeros(2), np.ones(2)), 1, 0.1, 0.5)
        assert member_vertices(region) is None

    def test_too_large(self):
        region = _pipeline_region(0)
        assert member_vertices(region, max_candidates=100) is None


class TestVertices:
    def test_interval_endpoints(self):
        region = RegionSpec(ResidualIntervalSet(np.ones((1, 1)), [2.0], [3.0]), 1, 0.1, 0.5)
        np.testing.assert_allclose(member_vertices(region).ravel(), [2.0, 3.0])

    def test_empty_region(self):
        iv = ResidualIntervalSet(np.ones((2, 1)), [0.0, 2.0], [1.0, 3.0])
        assert member_vertices(RegionSpec(iv, 2, 0.1, 0.5)).shape == (0, 1)

    def test_every_vertex_is_a_member(self):
        region = _pipeline_region(3)
        verts = member_vertices(region)
        assert verts.shape[0] > 0
        assert all(count_hits(region.intervals, v, atol=1e-8) >= region.k for v in verts)

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(31)
        checked = 0
        while checked < 40:
            region = random_region(rng, n_max=10)
            verts = member_vertices(region)
            if verts is None:
                continue
            checked += 1
            c = rng.normal(size=region.d)
            # A large M makes the MILP optimum the true region optimum.
            status, value = rii_exhaustive(region, c, "minimize", big_m=1e4)
            if verts.shape[0] == 0:
                assert status == "infeasible"
            else:
                assert status == "optimal"
                assert float(np.min(verts @ c)) == pytest.approx(value, abs=1e-6)

    @pytest.mark.parametrize("seed,noise", [(0, "additive_gaussian"), (1, "outliers"),
                                            (2, "multiplicative_gaussian")])
    def test_matches_highs_at_full_size(self, seed, noise):
        region = _pipeline_region(seed, noise)
        rng = np.random.default_rng(seed)
        for sense in ("minimize", "maximize"):
            c = rng.normal(size=3)
            ours = solve_region(region, c, sense, method="arrangement")
            assert ours.outcome.status is Status.OPTIMAL and ours.big_m_verified
            ref = _highs(region, c, sense, ours.big_m)
            sign = 1.0 if sense == "minimize" else -1.0
            assert ref.status == 0
            assert ours.outcome.objective_value == pytest.approx(sign * ref.fun, abs=1e-6)
