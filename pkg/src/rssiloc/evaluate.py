"""Monte Carlo sweep harness, error metrics and the Cramer-Rao reference bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from rssiloc import linsys
from rssiloc.errors import ConfigError, DomainError, GeometryError
from rssiloc.estimators import CONDITION_LIMIT, OK, Estimator, wls_solve
from rssiloc.model import (
    LN10,
    AnchorTruth,
    PathLossParams,
    Point2,
    RngStream,
    Topology,
    distance_from_rssi,
    observe_arrays,
)

# Trials are drawn in fixed-size blocks, each from its own stream keyed by
# (grid index, block index). Changing this changes every sweep result.
CHUNK_TRIALS = 2000

ALL_ESTIMATORS = (Estimator.LS, Estimator.WLS, Estimator.BCWLS, Estimator.HYPERBOLIC)


@dataclass(frozen=True)
class ExperimentConfig:
    topology: Topology
    params: PathLossParams = field(default_factory=PathLossParams)
    sigma_p_grid: tuple[float, ...] = (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)
    trials: int = 10_000
    seed: int = 0
    estimators: tuple[Estimator, ...] = ALL_ESTIMATORS
    reference_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sigma_p_grid", tuple(float(s) for s in self.sigma_p_grid))
        object.__setattr__(
            self, "estimators", tuple(Estimator(e) for e in self.estimators)
        )
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not self.sigma_p_grid:
            raise ConfigError("sigma_p_grid must not be empty")
        if any(not math.isfinite(s) or s < 0 for s in self.sigma_p_grid):
            raise ConfigError("sigma_p_grid values must be finite and non-negative")
        if not self.estimators:
            raise ConfigError("at least one estimator is required")
        if len(set(self.estimators)) != len(self.estimators):
            raise ConfigError("estimators must not repeat")
        m = len(self.topology.anchors)
        if not -m <= self.reference_index < m:
            raise ConfigError(f"reference_index {self.reference_index} out of range")


@dataclass(frozen=True)
class TrialMetrics:
    """Error statistics of one estimator at one noise level.

    Moments run over successful trials only; ``failures`` counts the rest.
    All fields are NaN if every trial failed.
    """

    trials: int
    failures: int
    rmse: float
    bias_norm: float
    mean_error: tuple[float, float]
    rmse_stderr: float = math.nan
    """Delta-method Monte Carlo standard error of ``rmse``."""


@dataclass(frozen=True)
class SweepCell:
    sigma_p: float
    estimator: Estimator
    metrics: TrialMetrics


@dataclass(frozen=True)
class CrlbResult:
    bound_rmse: float
    fim_condition: float


@dataclass(frozen=True)
class SweepRow:
    sigma_p_db: float
    estimator: Estimator
    trials: int
    failures: int
    rmse_m: float
    bias_norm_m: float
    mean_err_x_m: float
    mean_err_y_m: float
    crlb_rmse_m: float
    seed: int


class _Accumulator:
    def __init__(self):
        self.n = 0
        self.failures = 0
        self.err_sum = np.zeros(2)
        self.sq_sum = 0.0
        self.quad_sum = 0.0

    def add(self, err: np.ndarray, ok: np.ndarray):
        good = err[ok]
        self.n += len(good)
        self.failures += int(np.count_nonzero(~ok))
        self.err_sum = self.err_sum + good.sum(axis=0)
        sq = np.sum(np.square(good), axis=-1)
        self.sq_sum += float(np.sum(sq))
        self.quad_sum += float(np.sum(np.square(sq)))

    def metrics(self, trials: int) -> TrialMetrics:
        if self.n == 0:
            nan = float("nan")
            return TrialMetrics(trials, self.failures, nan, nan, (nan, nan))
        mean = self.err_sum / self.n
        mse = self.sq_sum / self.n
        rmse = math.sqrt(mse)
        var_sq = max(self.quad_sum / self.n - mse**2, 0.0)
        stderr = math.sqrt(var_sq / self.n) / (2 * rmse) if rmse > 0 else 0.0
        return TrialMetrics(
            trials,
            self.failures,
            rmse,
            float(np.hypot(*mean)),
            (float(mean[0]), float(mean[1])),
            stderr,
        )


def _block_estimates(
    positions: np.ndarray,
    rssi: np.ndarray,
    topology: Topology,
    params: PathLossParams,
    estimators: Sequence[Estimator],
    reference_index: int,
) -> dict[Estimator, tuple[np.ndarray, np.ndarray]]:
    """Every requested estimator on one block of paired observations.

    Returns ``{estimator: (w, ok)}`` with ``w`` of shape ``(n, 2)``.
    """
    d = distance_from_rssi(params, rssi)
    a, b = linsys.assemble(positions, d, reference_index)
    sigma_a, sigma_p, eta = topology.sigma_a, topology.sigma_p, params.eta
    out = {}

    def ok_of(w, cond, status):
        return (status == OK) & (cond <= CONDITION_LIMIT) & np.all(np.isfinite(w), axis=-1)

    if Estimator.LS in estimators:
        w, cond, status = wls_solve(a, b)
        out[Estimator.LS] = (w, ok_of(w, cond, status))
    if Estimator.WLS in estimators or Estimator.BCWLS in estimators:
        s = linsys.covariance_matrix(positions, d, sigma_a, sigma_p, eta, reference_index)
        c = linsys.bias_vector(d, sigma_a, sigma_p, eta, reference_index)
        w, cond, status = wls_solve(a, np.stack([b, b - c], axis=-1), s)
        for col, which in enumerate((Estimator.WLS, Estimator.BCWLS)):
            if which in estimators:
                wc = w[..., col]
                out[which] = (wc, ok_of(wc, cond, status))
    if Estimator.HYPERBOLIC in estimators:
        s0 = linsys.covariance_matrix(
            positions, d, np.zeros_like(sigma_a), sigma_p, eta, reference_index
        )
        w, cond, status = wls_solve(a, b, s0)
        out[Estimator.HYPERBOLIC] = (w, ok_of(w, cond, status))
    return out


def run_sweep(
    config: ExperimentConfig,
    rng_factory: Callable[[int, tuple[int, ...]], RngStream] = RngStream,
) -> list[SweepCell]:
    """Monte Carlo RMSE / bias sweep over the RSSI noise grid.

    Every anchor's RSSI noise is set to the grid value; anchor position noise
    comes from the topology. All estimators see the same draws in every trial.
    Cells are ordered by grid point, then by ``config.estimators``.
    """
    topo0 = config.topology
    truth = topo0.blind.as_array()
    cells = []
    for gi, sigma_p in enumerate(config.sigma_p_grid):
        topo = topo0.with_sigma_p(sigma_p)
        acc = {e: _Accumulator() for e in config.estimators}
        for ci, start in enumerate(range(0, config.trials, CHUNK_TRIALS)):
            n = min(CHUNK_TRIALS, config.trials - start)
            rng = rng_factory(config.seed, (gi, ci))
            positions, rssi = observe_arrays(topo, config.params, rng, n)
            block = _block_estimates(
                positions, rssi, topo, config.params, config.estimators,
                config.reference_index,
            )
            for which, (w, ok) in block.items():
                acc[which].add(w - truth, ok)
        for which in config.estimators:
            cells.append(SweepCell(sigma_p, which, acc[which].metrics(config.trials)))
    return cells


def _rssi_gradients(topology: Topology, params: PathLossParams) -> tuple[np.ndarray, np.ndarray]:
    """d(mean RSSI)/d(blind position) per anchor, shape (M, 2), and distances."""
    diff = topology.blind.as_array() - topology.anchor_positions
    d = topology.distances()
    if np.any(d <= 0):
        raise DomainError("blind node coincides with an anchor")
    scale = 10.0 * params.eta / LN10
    return -scale * diff / np.square(d)[:, None], d


def hybrid_information(topology: Topology, params: PathLossParams, sigma_p: float) -> np.ndarray:
    """Fisher information over ``(x_b, y_b, x_1, y_1, ..., x_M, y_M)``.

    RSSI likelihood information plus ``1 / sigma_a**2`` on each anchor
    coordinate from its reported position. Requires every sigma to be positive.
    """
    sigma_a = topology.sigma_a
    if sigma_p <= 0 or np.any(sigma_a <= 0):
        raise DomainError("full hybrid information needs sigma_p > 0 and all sigma_a > 0")
    g, _ = _rssi_gradients(topology, params)
    m = len(g)
    jac = np.zeros((m, 2 + 2 * m))
    jac[:, :2] = g
    for i in range(m):
        jac[i, 2 + 2 * i : 4 + 2 * i] = -g[i]
    info = jac.T @ jac / sigma_p**2
    info[2:, 2:] += np.diag(np.repeat(1.0 / np.square(sigma_a), 2))
    return info


def crlb(topology: Topology, params: PathLossParams, sigma_p: float) -> CrlbResult:
    """Cramer-Rao bound on blind-node RMSE with RSSI and anchor-position noise.

    The blind-position block of the inverse hybrid information reduces, by
    Woodbury on the anchor block, to an RSSI-only information in which anchor
    ``i`` has effective variance ``sigma_p**2 + sigma_a_i**2 |grad_i|**2``.
    That form stays finite when some variances are zero: an anchor with zero
    effective variance fixes the position along its gradient exactly.
    """
    if sigma_p < 0:
        raise DomainError("sigma_p must be non-negative")
    pos = topology.anchor_positions
    if np.linalg.matrix_rank(pos[1:] - pos[0]) < 2:
        raise GeometryError("anchors are collinear")
    g, _ = _rssi_gradients(topology, params)
    v = sigma_p**2 + np.square(topology.sigma_a) * np.sum(np.square(g), axis=1)
    exact = v <= 0
    info = (g[~exact].T / v[~exact]) @ g[~exact]
    # With exactly-known ranges the weighted information is unbounded; report
    # the conditioning of the unweighted gradient geometry instead.
    lam = np.linalg.eigvalsh(g.T @ g if np.any(exact) else info)
    cond = float(lam[1] / lam[0]) if lam[0] > 0 else math.inf

    known = g[exact]
    rank_known = np.linalg.matrix_rank(known) if len(known) else 0
    if rank_known == 2:
        return CrlbResult(0.0, cond)
    if rank_known == 1:
        n = known[np.argmax(np.linalg.norm(known, axis=1))]
        t = np.array([-n[1], n[0]]) / np.hypot(*n)
        along = t @ info @ t
        if not along > 0:
            raise GeometryError("information is singular across the exactly-known direction")
        return CrlbResult(math.sqrt(1.0 / along), cond)
    if not cond <= CONDITION_LIMIT:
        raise GeometryError("singular information matrix: degenerate anchor geometry")
    return CrlbResult(math.sqrt(float(np.trace(np.linalg.inv(info)))), cond)


def known_anchor_crlb(topology: Topology, params: PathLossParams, sigma_p: float) -> float:
    """Textbook RSSI bound with exactly known anchors: ``J = b**2 sum u u' / d**2``."""
    diff = topology.blind.as_array() - topology.anchor_positions
    d = topology.distances()
    unit = diff / d[:, None]
    b = 10.0 * params.eta / (sigma_p * LN10)
    info = b**2 * (unit.T / np.square(d)) @ unit
    return math.sqrt(float(np.trace(np.linalg.inv(info))))


def random_topology(
    rng: RngStream,
    sigma_a: Sequence[float],
    arena: float = 40.0,
    blind: str | Point2 = "uniform",
    sigma_p: float = 0.0,
) -> Topology:
    """Anchors uniform in ``[0, arena]**2``, one per entry of ``sigma_a``.

    ``blind`` is ``"uniform"`` (uniform in the arena), ``"center"`` or an
    explicit point.
    """
    m = len(sigma_a)
    xy = rng.uniform(0.0, arena, size=(m, 2))
    if blind == "uniform":
        b = Point2.from_array(rng.uniform(0.0, arena, size=2))
    elif blind == "center":
        b = Point2(arena / 2, arena / 2)
    elif isinstance(blind, Point2):
        b = blind
    else:
        raise ConfigError(f"unknown blind placement rule {blind!r}")
    anchors = [AnchorTruth(Point2.from_array(p), s, sigma_p) for p, s in zip(xy, sigma_a)]
    return Topology(tuple(anchors), b)


def summarize(
    results: Iterable[SweepCell],
    crlbs: Mapping[float, CrlbResult | float] | None = None,
    seed: int = 0,
) -> list[SweepRow]:
    """Flatten sweep cells into table rows, joining the CRLB per noise level."""
    rows = []
    for cell in results:
        bound = (crlbs or {}).get(cell.sigma_p, math.nan)
        if isinstance(bound, CrlbResult):
            bound = bound.bound_rmse
        m = cell.metrics
        rows.append(
            SweepRow(
                sigma_p_db=cell.sigma_p,
                estimator=cell.estimator,
                trials=m.trials,
                failures=m.failures,
                rmse_m=m.rmse,
                bias_norm_m=m.bias_norm,
                mean_err_x_m=m.mean_error[0],
                mean_err_y_m=m.mean_error[1],
                crlb_rmse_m=float(bound),
                seed=seed,
            )
        )
    if not rows:
        raise ValueError("no sweep results to summarize")
    return rows


def crlb_curve(
    topology: Topology, params: PathLossParams, sigma_p_grid: Sequence[float]
) -> dict[float, CrlbResult]:
    return {float(s): crlb(topology, params, s) for s in sigma_p_grid}
