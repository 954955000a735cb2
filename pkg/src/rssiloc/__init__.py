"""RSSI self-localization with noisy anchor positions.

Bias-compensated weighted least squares (BC-WLS), the plain LS/WLS variants,
a distance-noise-only hyperbolic baseline, a hybrid Cramer-Rao bound and a
Monte Carlo sweep harness.
"""

from rssiloc.errors import (
    ConfigError,
    DomainError,
    GeometryError,
    InsufficientAnchorsError,
    LocalizationError,
    WeightError,
)
from rssiloc.model import (
    AnchorObservation,
    AnchorTruth,
    PathLossParams,
    Point2,
    RngStream,
    Topology,
    distance_from_rssi,
    mean_rssi,
    observe,
    perturb_anchor,
    sample_rssi,
)
from rssiloc.linsys import LinearSystem, WeightModel, bias_c, build_system, covariance_s, weight_model
from rssiloc.estimators import (
    Estimate,
    Estimator,
    solve_bcwls,
    solve_hyperbolic_baseline,
    solve_ls,
    solve_wls,
    estimate_all,
)
from rssiloc.evaluate import (
    CrlbResult,
    ExperimentConfig,
    SweepCell,
    SweepRow,
    TrialMetrics,
    crlb,
    random_topology,
    run_sweep,
    summarize,
)

__version__ = "0.1.0"

__all__ = [
    "AnchorObservation",
    "AnchorTruth",
    "ConfigError",
    "CrlbResult",
    "DomainError",
    "Estimate",
    "Estimator",
    "ExperimentConfig",
    "GeometryError",
    "InsufficientAnchorsError",
    "LinearSystem",
    "LocalizationError",
    "PathLossParams",
    "Point2",
    "RngStream",
    "SweepCell",
    "SweepRow",
    "Topology",
    "TrialMetrics",
    "WeightError",
    "WeightModel",
    "bias_c",
    "build_system",
    "covariance_s",
    "crlb",
    "distance_from_rssi",
    "estimate_all",
    "mean_rssi",
    "observe",
    "perturb_anchor",
    "random_topology",
    "run_sweep",
    "sample_rssi",
    "solve_bcwls",
    "solve_hyperbolic_baseline",
    "solve_ls",
    "solve_wls",
    "summarize",
    "weight_model",
]
