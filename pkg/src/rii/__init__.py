"""Finite-sample confidence regions for linear regression from residual intervals.

The region ``{theta : theta @ x_i in [min(y_i, yhat_i), max(y_i, yhat_i)] for
at least k test points}`` contains the true parameter with probability at
least ``S_n(k, b)``, whatever ad hoc predictor produced ``yhat``.
"""

from .applications import (
    CoordinateIntervals,
    TestVerdict,
    all_coordinate_intervals,
    coordinate_interval,
    hypothesis_test,
    robust_minimax_box,
)
from .coverage import CoverageParams, binomial_tail, coverage_curve, k_alpha
from .errors import (
    DimensionMismatchError,
    EmptyRegionError,
    InvalidArgumentError,
    NodeLimitError,
    NoValidThresholdError,
    NumericalInstabilityError,
    RankDeficientError,
    RIIError,
    UnsupportedInputError,
)
from .estimators import FeatureMap, LinearFit, fit_huber, fit_ols, predict
from .region import (
    Dataset,
    PredictionSet,
    RegionSpec,
    ResidualIntervalSet,
    boundedness_necessary_check,
    build_region,
    count_hits,
    membership,
    residual_intervals,
    split_dataset,
)
from .synth import GroundTruth, NoiseSpec, estimate_b_bar, sample_dataset, sample_theta_star

__version__ = "0.1.0"
