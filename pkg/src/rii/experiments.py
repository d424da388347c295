"""Synthetic experiment harness: coverage, widths, rejection, timing, coverage curves.

Each run is described by an ``ExperimentConfig`` and writes two files under
``<out_dir>/<experiment>_seed<seed>/``: ``trials.csv`` (one row per trial)
and ``summary.json``. Trials draw from their own RNG streams, so a run gives
the same summary whether trials execute serially or in a process pool.
Summaries leave out wall-clock measurements (except for ``timing``, whose
whole point is to measure them), which keeps them byte-reproducible.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np
from scipy.stats import binomtest

from . import arrangement
from .applications import all_coordinate_intervals, hypothesis_test
from .coverage import b_grid, binomial_tail, coverage_curve, curve_to_csv, k_alpha
from .errors import EmptyRegionError, InvalidArgumentError, NodeLimitError
from .estimators import PREDICTORS, fit_predictor, predict
from .milp.encode import METHODS, solve_region
from .milp.model import Sense, Status
from .region import (
    RegionSpec,
    build_region,
    count_hits,
    membership,
    residual_intervals,
    split_dataset,
)
from .synth import (
    GroundTruth,
    NoiseSpec,
    estimate_b_bar,
    nonlinear_truth,
    rng_stream,
    sample_dataset,
    sample_theta_star,
)

log = logging.getLogger(__name__)

EXPERIMENTS = ("coverage", "widths", "bounds", "reject", "nonlinear_coverage", "figure1", "timing")

# Published reference values, transcribed for side-by-side reports and never
# recomputed here. Percentages for rates, absolute numbers for widths/seconds.
PUBLISHED_REFERENCE: dict[str, Any] = {
    "note": "transcribed reference values, not recomputed by this package",
    "coverage": {
        "sps_outer": {"additive_gaussian": {"3": 96.8, "10": 100.0},
                      "multiplicative_gaussian": {"3": 97.2, "10": 100.0},
                      "outliers": {"3": 98.4, "10": 100.0}},
        "rii_ls": {"additive_gaussian": {"3": 89.7, "10": 91.1, "50": 89.1},
                   "multiplicative_gaussian": {"3": 91.1, "10": 89.0, "50": 90.1},
                   "outliers": {"3": 89.5, "10": 91.6, "50": 90.8}},
    },
    "widths": {
        "sps": {"additive_gaussian": 1.230, "multiplicative_gaussian": 1.903, "outliers": 2.633},
        "rii_ls": {"additive_gaussian": 2.861, "multiplicative_gaussian": 1.875, "outliers": 2.486},
        "rii_huber": {"additive_gaussian": 2.766, "multiplicative_gaussian": 1.958,
                      "outliers": 0.363},
    },
    "reject": {"easy": {"v_star": 0.05, "b_bar": 0.05, "rejection": 100.0},
               "med": {"v_star": 0.2, "b_bar": 0.14, "rejection": 70.0},
               "hard": {"v_star": 0.1, "b_bar": 0.27, "rejection": 4.0}},
    "nonlinear_coverage": {"easy": {"k": 2, "n_te": 74, "coverage": 90.4},
                           "med": {"k": 7, "n_te": 73, "coverage": 92.6},
                           "hard": {"k": 10, "n_te": 50, "coverage": 92.4}},
    "timing": {"sps": {"instantiation_s": 0.0270, "solve_s": 0.0013},
               "rii": {"instantiation_s": 0.0007, "solve_s": 2.7972}},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment run.

    ``k=None`` means "use ``k_alpha(n_te, alpha, b)``". ``resample_theta``
    draws a fresh ``theta_star`` per trial (coverage tables); otherwise one
    ``theta_star`` is shared by all trials (width/bounds figures).
    """

    experiment: str
    d: int = 3
    n_train: int = 60
    n_te: int = 39
    k: int | None = 16
    alpha: float = 0.1
    b: float = 0.5
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    predictor: str = "ols"
    trials: int = 100
    seed: int = 0
    resample_theta: bool = True
    v_star: float = 0.0
    node_limit: int = 200_000
    time_limit: float | None = None
    method: str = "auto"
    workers: int = 1
    k_list: tuple[int, ...] = (4, 8, 12, 16)
    grid_points: int = 51

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidArgumentError(f"unknown experiment {self.experiment!r}")
        if self.predictor not in PREDICTORS:
            raise InvalidArgumentError(f"unknown predictor {self.predictor!r}")
        if self.method not in METHODS:
            raise InvalidArgumentError(f"unknown method {self.method!r}")
        for name in ("d", "n_te", "trials", "node_limit", "workers", "grid_points"):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"{name} must be >= 1")
        if self.time_limit is not None and self.time_limit <= 0:
            raise InvalidArgumentError("time_limit must be positive")
        if self.n_train < 0:
            raise InvalidArgumentError("n_train must be >= 0")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidArgumentError("alpha must lie in (0, 1)")
        if not 0.0 < self.b <= 0.5:
            raise InvalidArgumentError("b must lie in (0, 0.5]")
        object.__setattr__(self, "k_list", tuple(int(k) for k in self.k_list))
        if self.experiment == "figure1":
            if any(not 0 <= k <= self.n_te for k in self.k_list):
                raise InvalidArgumentError("every k in k_list must lie in [0, n_te]")
            return
        k = self.threshold
        if not 1 <= k <= self.n_te:
            raise InvalidArgumentError(f"k={k} must lie in [1, n_te={self.n_te}]")
        s = binomial_tail(self.n_te, k, self.b)
        if s < 1.0 - self.alpha:
            raise InvalidArgumentError(
                f"S_{self.n_te}({k}, {self.b}) = {s:.6f} < 1 - alpha = {1 - self.alpha}: "
                "the coverage guarantee would not hold"
            )
        if self.experiment in ("widths", "bounds") and k < self.d:
            raise InvalidArgumentError("k < d: the region is empty or unbounded, widths are undefined")

    @property
    def threshold(self) -> int:
        if self.k is not None:
            return int(self.k)
        k = k_alpha(self.n_te, self.alpha, self.b)
        if k is None:
            raise InvalidArgumentError(
                f"no k reaches confidence {1 - self.alpha} with n_te={self.n_te}, b={self.b}"
            )
        return k

    @property
    def guaranteed_coverage(self) -> float:
        return binomial_tail(self.n_te, self.threshold, self.b)

    @property
    def run_name(self) -> str:
        return f"{self.experiment}_seed{self.seed}"

    def to_dict(self) -> dict[str, Any]:
        doc = asdict(self)
        doc["noise"] = self.noise.to_dict()
        doc["k_list"] = list(self.k_list)
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ExperimentConfig":
        doc = dict(doc)
        if "noise" in doc and isinstance(doc["noise"], dict):
            doc["noise"] = NoiseSpec.from_dict(doc["noise"])
        if "k_list" in doc:
            doc["k_list"] = tuple(doc["k_list"])
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidArgumentError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class TrialRecord:
    """Outcome of one trial; fields irrelevant to the experiment stay ``None``."""

    trial: int
    covered: bool | None = None
    rejected: bool | None = None
    widths: list[float] | None = None
    lower: list[float] | None = None
    upper: list[float] | None = None
    empty: bool | None = None
    inconclusive: bool | None = None
    hits: int | None = None
    solve_nodes: int = 0
    wall_time: float = 0.0
    instantiation_time: float | None = None
    membership_time: float | None = None
    solve_time: float | None = None
    solve_status: str | None = None
    alt_solve_time: float | None = None

    def present_fields(self) -> list[str]:
        return [k for k, v in asdict(self).items() if v is not None]


# -- per-trial plumbing -------------------------------------------------------

def _theta_star(cfg: ExperimentConfig, trial: int) -> np.ndarray:
    if cfg.resample_theta:
        return sample_theta_star(cfg.d, cfg.seed, trial)
    return rng_stream(cfg.seed, 0, "theta_fixed").standard_normal(cfg.d)


def _truth(cfg: ExperimentConfig, theta: np.ndarray) -> GroundTruth:
    if cfg.v_star != 0.0 or cfg.experiment in ("reject", "nonlinear_coverage"):
        return nonlinear_truth(theta, cfg.v_star)
    return GroundTruth(theta, 0.0, cfg.noise)


def _split_seed(cfg: ExperimentConfig, trial: int) -> int:
    return int(rng_stream(cfg.seed, trial, "split").integers(2**63 - 1))


def _make_region(cfg: ExperimentConfig, trial: int) -> tuple[RegionSpec, np.ndarray]:
    theta = _theta_star(cfg, trial)
    truth = _truth(cfg, theta)
    data = sample_dataset(truth, cfg.n_train + cfg.n_te, cfg.seed, trial)
    test, train = split_dataset(data, cfg.n_te, _split_seed(cfg, trial))
    fit = fit_predictor(cfg.predictor, train)
    preds = predict(fit, test.x)
    iv = residual_intervals(test, preds)
    region = build_region(iv, cfg.alpha, cfg.b, k=cfg.threshold)
    return region, theta


def _trial_coverage(cfg: ExperimentConfig, trial: int) -> TrialRecord:
    start = time.perf_counter()
    region, theta = _make_region(cfg, trial)
    hits = count_hits(region.intervals, theta)
    return TrialRecord(trial, covered=hits >= region.k, hits=hits,
                       wall_time=time.perf_counter() - start)


def _trial_widths(cfg: ExperimentConfig, trial: int) -> TrialRecord:
    start = time.perf_counter()
    region, theta = _make_region(cfg, trial)
    try:
        box = all_coordinate_intervals(region, cfg.node_limit, cfg.method)
    except EmptyRegionError as err:
        return TrialRecord(trial, empty=True, inconclusive=False, solve_nodes=err.nodes,
                           wall_time=time.perf_counter() - start)
    except NodeLimitError as err:
        box = err.partial
        return TrialRecord(trial, empty=False, inconclusive=True, lower=list(box.lower),
                           upper=list(box.upper), solve_nodes=box.nodes,
                           wall_time=time.perf_counter() - start)
    return TrialRecord(
        trial, covered=box.contains(theta), widths=[float(w) for w in box.widths],
        lower=[float(v) for v in box.lower], upper=[float(v) for v in box.upper],
        empty=False, inconclusive=False, solve_nodes=box.nodes,
        wall_time=time.perf_counter() - start,
    )


def _trial_reject(cfg: ExperimentConfig, trial: int) -> TrialRecord:
    start = time.perf_counter()
    region, theta = _make_region(cfg, trial)
    verdict = hypothesis_test(region, cfg.node_limit, cfg.method)
    return TrialRecord(trial, rejected=verdict.rejected, inconclusive=verdict.inconclusive,
                       solve_nodes=verdict.nodes, wall_time=time.perf_counter() - start)


def _trial_timing(cfg: ExperimentConfig, trial: int) -> TrialRecord:
    """Instantiation, 10^4 membership tests, and one ``theta_1`` minimization.

    The timed solve uses branch-and-bound on the MILP; the arrangement
    engine's time on the same problem is recorded as ``alt_solve_time``.
    """
    start = time.perf_counter()
    theta = _theta_star(cfg, trial)
    truth = _truth(cfg, theta)
    data = sample_dataset(truth, cfg.n_train + cfg.n_te, cfg.seed, trial)
    test, train = split_dataset(data, cfg.n_te, _split_seed(cfg, trial))

    t0 = time.perf_counter()
    fit = fit_predictor(cfg.predictor, train)
    iv = residual_intervals(test, predict(fit, test.x))
    region = build_region(iv, cfg.alpha, cfg.b, k=cfg.threshold)
    t_inst = time.perf_counter() - t0

    cands = theta + rng_stream(cfg.seed, trial, "timing_candidates").standard_normal((10_000, cfg.d))
    t0 = time.perf_counter()
    for cand in cands:
        membership(region, cand)
    t_member = time.perf_counter() - t0

    c = np.zeros(cfg.d)
    c[0] = 1.0
    t0 = time.perf_counter()
    solve = solve_region(region, c, Sense.MINIMIZE, cfg.node_limit, method="branch_and_bound",
                         time_limit=cfg.time_limit)
    t_solve = time.perf_counter() - t0

    t_alt = None
    if arrangement.is_applicable(region):
        t0 = time.perf_counter()
        solve_region(region, c, Sense.MINIMIZE, method="arrangement")
        t_alt = time.perf_counter() - t0
    return TrialRecord(
        trial, instantiation_time=t_inst, membership_time=t_member, solve_time=t_solve,
        solve_status=solve.outcome.status.value, solve_nodes=solve.outcome.nodes_explored,
        alt_solve_time=t_alt, wall_time=time.perf_counter() - start,
    )


_TRIAL_FUNCS: dict[str, Callable[[ExperimentConfig, int], TrialRecord]] = {
    "coverage": _trial_coverage,
    "nonlinear_coverage": _trial_coverage,
    "widths": _trial_widths,
    "bounds": _trial_widths,
    "reject": _trial_reject,
    "timing": _trial_timing,
}


def _run_one(args: tuple[ExperimentConfig, int]) -> TrialRecord:
    cfg, trial = args
    return _TRIAL_FUNCS[cfg.experiment](cfg, trial)


def run_trials(cfg: ExperimentConfig) -> list[TrialRecord]:
    """All trials of a run, sorted by trial index."""
    jobs = [(cfg, t) for t in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_run_one, jobs, chunksize=max(1, cfg.trials // (4 * cfg.workers))))
    else:
        records = [_run_one(job) for job in jobs]
    return sorted(records, key=lambda r: r.trial)


# -- summaries -----------------------------------------------------------------

def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def _rate_block(successes: int, trials: int) -> dict[str, Any]:
    lo, hi = wilson_interval(successes, trials) if trials else (math.nan, math.nan)
    return {"count": successes, "trials": trials,
            "rate": successes / trials if trials else math.nan, "wilson95": [lo, hi]}


def _base_summary(cfg: ExperimentConfig) -> dict[str, Any]:
    return {"experiment": cfg.experiment, "config": cfg.to_dict(),
            "k": cfg.threshold, "guaranteed_coverage": cfg.guaranteed_coverage,
            "target_coverage": 1.0 - cfg.alpha}


def run_coverage(cfg: ExperimentConfig) -> tuple[dict[str, Any], list[TrialRecord]]:
    """Frequency with which ``theta_star`` lands in the region (membership only)."""
    if cfg.experiment not in ("coverage", "nonlinear_coverage"):
        raise InvalidArgumentError("run_coverage needs experiment='coverage'")
    records = run_trials(cfg)
    covered = sum(bool(r.covered) for r in records)
    summary = _base_summary(cfg)
    summary["coverage"] = _rate_block(covered, len(records))
    summary["published_reference"] = PUBLISHED_REFERENCE["coverage"]
    return summary, records


def run_nonlinear_coverage(cfg: ExperimentConfig, n_mc: int = 100_000) -> tuple[dict[str, Any], list[TrialRecord]]:
    """Coverage under the sin-perturbed model.

    ``cfg.b`` should be this package's ``estimate_b_bar`` for ``cfg.v_star``;
    the estimate is recomputed and a configured ``b`` more than three
    standard errors above it is flagged as ``b_exceeds_b_bar`` (the coverage
    guarantee does not apply then).
    """
    if cfg.experiment != "nonlinear_coverage":
        raise InvalidArgumentError("run_nonlinear_coverage needs experiment='nonlinear_coverage'")
    est = estimate_b_bar(nonlinear_truth(np.zeros(cfg.d), cfg.v_star), n_mc=n_mc, seed=cfg.seed)
    summary, records = run_coverage(cfg)
    summary["b_bar_estimate"] = {"value": est.value, "stderr": est.stderr}
    summary["b_exceeds_b_bar"] = bool(cfg.b > est.value + 3.0 * est.stderr)
    summary["published_reference"] = PUBLISHED_REFERENCE["nonlinear_coverage"]
    return summary, records


def run_widths(cfg: ExperimentConfig) -> tuple[dict[str, Any], list[TrialRecord]]:
    """Mean coordinate-interval width; empty or node-limited trials reported apart."""
    if cfg.experiment not in ("widths", "bounds"):
        raise InvalidArgumentError("run_widths needs experiment='widths' or 'bounds'")
    records = run_trials(cfg)
    finite = [r for r in records if r.widths is not None and np.all(np.isfinite(r.widths))]
    per_trial = [float(np.mean(r.widths)) for r in finite]
    summary = _base_summary(cfg)
    summary.update({
        "mean_width": float(np.mean(per_trial)) if per_trial else math.nan,
        "mean_width_per_coord": (np.mean([r.widths for r in finite], axis=0).tolist()
                                 if finite else []),
        "trials_used": len(finite),
        "empty_trials": sum(bool(r.empty) for r in records),
        "inconclusive_trials": sum(bool(r.inconclusive) for r in records),
        "unbounded_trials": sum(r.widths is not None and not np.all(np.isfinite(r.widths))
                                for r in records),
        "box_covers_theta_star": _rate_block(sum(bool(r.covered) for r in finite), len(finite)),
        "published_reference": PUBLISHED_REFERENCE["widths"],
    })
    if cfg.experiment == "bounds":
        summary["bounds"] = [{"trial": r.trial, "lower": r.lower, "upper": r.upper}
                             for r in records]
        summary["theta_star"] = (_theta_star(cfg, 0).tolist() if not cfg.resample_theta else None)
    return summary, records


def run_reject(cfg: ExperimentConfig) -> tuple[dict[str, Any], list[TrialRecord]]:
    """Frequency with which the region is proven empty."""
    if cfg.experiment != "reject":
        raise InvalidArgumentError("run_reject needs experiment='reject'")
    records = run_trials(cfg)
    rejected = sum(bool(r.rejected) for r in records)
    summary = _base_summary(cfg)
    summary["rejection"] = _rate_block(rejected, len(records))
    summary["inconclusive_trials"] = sum(bool(r.inconclusive) for r in records)
    summary["published_reference"] = PUBLISHED_REFERENCE["reject"]
    return summary, records


def run_timing(cfg: ExperimentConfig) -> tuple[dict[str, Any], list[TrialRecord]]:
    """Mean instantiation time, membership time and branch-and-bound solve time."""
    if cfg.experiment != "timing":
        raise InvalidArgumentError("run_timing needs experiment='timing'")
    records = run_trials(cfg)
    alt = [r.alt_solve_time for r in records if r.alt_solve_time is not None]
    summary = _base_summary(cfg)
    summary.update({
        "mean_instantiation_s": float(np.mean([r.instantiation_time for r in records])),
        "mean_membership_1e4_s": float(np.mean([r.membership_time for r in records])),
        "mean_solve_s": float(np.mean([r.solve_time for r in records])),
        "max_solve_s": float(np.max([r.solve_time for r in records])),
        "mean_nodes": float(np.mean([r.solve_nodes for r in records])),
        "optimal_fraction": sum(r.solve_status == Status.OPTIMAL.value for r in records) / len(records),
        "mean_arrangement_solve_s": float(np.mean(alt)) if alt else None,
        "published_reference": PUBLISHED_REFERENCE["timing"],
    })
    return summary, records


def figure1(cfg: ExperimentConfig) -> tuple[dict[str, Any], list[tuple[int, float, float]]]:
    """Guaranteed-coverage curves ``S_{n_te}(k, b)`` over ``b`` in ``[0, 0.5]``."""
    if cfg.experiment != "figure1":
        raise InvalidArgumentError("figure1 needs experiment='figure1'")
    rows = coverage_curve(cfg.n_te, list(cfg.k_list), b_grid(cfg.grid_points))
    summary = {"experiment": "figure1", "config": cfg.to_dict(),
               "at_b_half": {str(k): binomial_tail(cfg.n_te, k, 0.5) for k in cfg.k_list}}
    return summary, rows


_RUNNERS = {
    "coverage": run_coverage,
    "nonlinear_coverage": run_nonlinear_coverage,
    "widths": run_widths,
    "bounds": run_widths,
    "reject": run_reject,
    "timing": run_timing,
    "figure1": figure1,
}


def _csv_cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, list):
        return ";".join(_csv_cell(x) for x in v)
    return str(v)


def write_trials_csv(records: list[TrialRecord], path: Path) -> None:
    cols: list[str] = []
    for r in records:
        for name in r.present_fields():
            if name not in cols:
                cols.append(name)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for r in records:
            doc = asdict(r)
            writer.writerow([_csv_cell(doc[c]) for c in cols])


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> dict[str, Any]:
    """Run ``cfg`` and, when ``out_dir`` is given, write its trials CSV and summary JSON."""
    summary, rows = _RUNNERS[cfg.experiment](cfg)
    summary = _jsonable(summary)
    if out_dir is not None:
        run_dir = Path(out_dir) / cfg.run_name
        run_dir.mkdir(parents=True, exist_ok=True)
        if cfg.experiment == "figure1":
            (run_dir / "curve.csv").write_text(curve_to_csv(rows))
        else:
            write_trials_csv(rows, run_dir / "trials.csv")
        (run_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        log.info("wrote %s", run_dir)
    return summary


def with_overrides(cfg: ExperimentConfig, **changes: Any) -> ExperimentConfig:
    """``dataclasses.replace`` that skips ``None`` values (handy for CLI flags)."""
    return replace(cfg, **{k: v for k, v in changes.items() if v is not None})
