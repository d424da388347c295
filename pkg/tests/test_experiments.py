"""Tests for the experiment harness."""

import csv
import json

import numpy as np
import pytest

from rii.coverage import binomial_tail
from rii.errors import InvalidArgumentError
from rii.experiments import (
    ExperimentConfig,
    run_coverage,
    run_experiment,
    run_reject,
    run_widths,
    wilson_interval,
    with_overrides,
)
from rii.synth import NoiseSpec


def _small(experiment, **kw):
    base = dict(d=2, n_train=30, n_te=20, k=None, trials=8)
    base.update(kw)
    return ExperimentConfig(experiment, **base)


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig("coverage")
        assert (cfg.d, cfg.n_te, cfg.threshold, cfg.alpha, cfg.b) == (3, 39, 16, 0.1, 0.5)
        assert cfg.guaranteed_coverage == pytest.approx(0.9002, abs=5e-4)
        assert cfg.run_name == "coverage_seed0"

    def test_threshold_from_alpha(self):
        assert ExperimentConfig("coverage", k=None).threshold == 16

    @pytest.mark.parametrize("changes", [
        {"experiment": "nope"}, {"predictor": "nope"}, {"method": "nope"},
        {"trials": 0}, {"workers": 0}, {"alpha": 1.0}, {"b": 0.6}, {"b": 0.0},
        {"k": 40}, {"k": 0}, {"k": 25}, {"time_limit": 0.0}, {"n_train": -1},
        {"experiment": "figure1", "k_list": (4, 99)},
    ])
    def test_invalid(self, changes):
        doc = {"experiment": "coverage"}
        doc.update(changes)
        with pytest.raises(InvalidArgumentError):
            ExperimentConfig(**doc)

    def test_widths_need_k_at_least_d(self):
        with pytest.raises(InvalidArgumentError):
            ExperimentConfig("widths", d=3, n_te=3, k=2, alpha=0.5)

    def test_no_valid_threshold(self):
        with pytest.raises(InvalidArgumentError):
            ExperimentConfig("coverage", n_te=1, k=None, alpha=0.01)

    def test_json_round_trip(self):
        cfg = ExperimentConfig("widths", noise=NoiseSpec("outliers"), predictor="huber",
                               k_list=(1, 2), time_limit=5.0)
        assert ExperimentConfig.from_json(cfg.to_json()) == cfg

    def test_unknown_key(self):
        with pytest.raises(InvalidArgumentError):
            ExperimentConfig.from_dict({"experiment": "coverage", "bogus": 1})

    def test_with_overrides_skips_none(self):
        cfg = with_overrides(ExperimentConfig("coverage"), d=5, n_te=None)
        assert cfg.d == 5 and cfg.n_te == 39


class TestRunners:
    def test_noiseless_coverage_is_one(self):
        cfg = _small("coverage", noise=NoiseSpec(sigma=0.0), trials=20)
        summary, records = run_coverage(cfg)
        assert summary["coverage"]["rate"] == 1.0
        assert all(r.covered for r in records)

    def test_coverage_summary_fields(self):
        summary, records = run_coverage(_small("coverage"))
        block = summary["coverage"]
        assert block["trials"] == 8 and len(records) == 8
        lo, hi = block["wilson95"]
        assert lo <= block["rate"] <= hi
        assert summary["guaranteed_coverage"] == binomial_tail(20, summary["k"], 0.5)

    def test_wrong_runner(self):
        with pytest.raises(InvalidArgumentError):
            run_coverage(_small("reject"))

    def test_widths(self):
        summary, records = run_widths(_small("widths", trials=4))
        assert summary["trials_used"] + summary["empty_trials"] + summary["unbounded_trials"] \
            + summary["inconclusive_trials"] == 4
        assert summary["mean_width"] > 0
        for r in records:
            if r.widths is not None:
                np.testing.assert_allclose(r.widths, np.subtract(r.upper, r.lower))

    def test_methods_agree_on_widths(self):
        a, _ = run_widths(_small("widths", trials=3, method="branch_and_bound"))
        b, _ = run_widths(_small("widths", trials=3, method="arrangement"))
        assert a["mean_width"] == pytest.approx(b["mean_width"], abs=1e-6)

    def test_reject_linear_predictor(self):
        summary, _ = run_reject(_small("reject", trials=5))
        assert summary["rejection"]["rate"] == 0.0

    def test_wilson(self):
        lo, hi = wilson_interval(90, 100)
        assert lo < 0.9 < hi
        assert wilson_interval(0, 10)[0] == pytest.approx(0.0, abs=1e-12)


class TestDeterminism:
    def test_summary_bytes_identical(self, tmp_path):
        cfg = _small("coverage")
        run_experiment(cfg, tmp_path / "a")
        run_experiment(cfg, tmp_path / "b")
        a = (tmp_path / "a" / cfg.run_name / "summary.json").read_bytes()
        b = (tmp_path / "b" / cfg.run_name / "summary.json").read_bytes()
        assert a == b

    def test_workers_match_serial(self):
        serial = run_experiment(_small("widths", trials=4))
        pooled = run_experiment(_small("widths", trials=4, workers=2))
        pooled["config"]["workers"] = 1
        assert json.dumps(serial, sort_keys=True) == json.dumps(pooled, sort_keys=True)

    def test_seed_changes_result(self):
        a, ra = run_coverage(_small("coverage", trials=4, seed=1))
        b, rb = run_coverage(_small("coverage", trials=4, seed=2))
        assert [r.hits for r in ra] != [r.hits for r in rb]

    def test_fixed_theta(self):
        summary = run_experiment(_small("bounds", trials=2, resample_theta=False))
        assert len(summary["theta_star"]) == 2
        assert len(summary["bounds"]) == 2


class TestOutputs:
    def test_run_dir(self, tmp_path):
        cfg = _small("reject", trials=3)
        summary = run_experiment(cfg, tmp_path)
        run_dir = tmp_path / "reject_seed0"
        assert json.loads((run_dir / "summary.json").read_text()) == summary
        rows = list(csv.DictReader((run_dir / "trials.csv").open()))
        assert [int(r["trial"]) for r in rows] == [0, 1, 2]
        assert "rejected" in rows[0]

    def test_figure1(self, tmp_path):
        cfg = ExperimentConfig("figure1", n_te=30)
        summary = run_experiment(cfg, tmp_path)
        text = (tmp_path / "figure1_seed0" / "curve.csv").read_text().splitlines()
        assert len(text) == 1 + 4 * 51
        assert summary["at_b_half"]["16"] == pytest.approx(binomial_tail(30, 16, 0.5), abs=1e-15)

    def test_timing_fields(self):
        cfg = ExperimentConfig("timing", d=2, n_te=20, k=None, trials=1)
        summary = run_experiment(cfg)
        assert summary["optimal_fraction"] == 1.0
        assert summary["mean_instantiation_s"] < 0.1
        assert summary["max_solve_s"] >= summary["mean_solve_s"] > 0
