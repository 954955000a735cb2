"""Position estimators over a linearized system ``2 A w = b``.

* LS: ``w = 1/2 (A'A)^-1 A'b``
* WLS: ``w = 1/2 (A'S^-1 A)^-1 A'S^-1 b``
* BC-WLS: WLS applied to ``b - c``
* hyperbolic baseline: WLS whose ``S`` ignores anchor position noise, no bias
  compensation

The batched kernel :func:`wls_solve` is what the Monte Carlo harness uses; the
Estimate-returning functions are thin wrappers for single systems.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from rssiloc.errors import GeometryError, WeightError
from rssiloc.linsys import LinearSystem, WeightModel, build_system, weight_model
from rssiloc.model import AnchorObservation, PathLossParams, Point2

CONDITION_LIMIT = 1e12

OK = 0
RANK_DEFICIENT = 1
NOT_POSITIVE_DEFINITE = 2


class Estimator(str, enum.Enum):
    LS = "LS"
    WLS = "WLS"
    BCWLS = "BCWLS"
    HYPERBOLIC = "HYPERBOLIC-BASELINE"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Estimate:
    position: Point2
    estimator: Estimator
    condition: float
    """Condition number of the (weighted) normal-equations matrix."""

    @property
    def flagged(self) -> bool:
        return not self.condition <= CONDITION_LIMIT


def _batch_cholesky(s: np.ndarray):
    """Cholesky factors of a stack of matrices; failures get identity and False."""
    try:
        return np.linalg.cholesky(s), np.ones(s.shape[:-2], dtype=bool)
    except np.linalg.LinAlgError:
        pass
    flat = s.reshape(-1, *s.shape[-2:])
    out = np.empty_like(flat)
    good = np.ones(len(flat), dtype=bool)
    eye = np.eye(s.shape[-1])
    for i, mat in enumerate(flat):
        try:
            out[i] = np.linalg.cholesky(mat)
        except np.linalg.LinAlgError:
            out[i] = eye
            good[i] = False
    return out.reshape(s.shape), good.reshape(s.shape[:-2])


def wls_solve(a, rhs, s=None):
    """Batched ``1/2 (A'S^-1 A)^-1 A'S^-1 rhs``.

    Args:
        a: ``(..., n, 2)`` system matrices.
        rhs: ``(..., n)`` or ``(..., n, k)`` right-hand sides.
        s: ``(..., n, n)`` weight covariances; ``None`` means LS. An all-zero
            ``S`` falls back to LS for that batch member.

    Returns:
        ``(w, condition, status)``: ``w`` has shape ``(..., 2)`` or
        ``(..., 2, k)``; ``status`` is ``OK``, ``RANK_DEFICIENT`` or
        ``NOT_POSITIVE_DEFINITE`` per batch member. ``w`` is NaN where status
        is not OK.
    """
    a = np.asarray(a, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    vector_rhs = rhs.ndim == a.ndim - 1
    if vector_rhs:
        rhs = rhs[..., None]
    batch = a.shape[:-2]
    status = np.zeros(batch, dtype=np.int8)

    if s is None:
        ya, yb = a, rhs
    else:
        s = np.asarray(s, dtype=float)
        zero = ~np.any(s, axis=(-2, -1))
        eye = np.eye(s.shape[-1])
        s = np.where(zero[..., None, None], eye, s)
        chol, good = _batch_cholesky(s)
        status[~good] = NOT_POSITIVE_DEFINITE
        y = np.linalg.solve(chol, np.concatenate([a, rhs], axis=-1))
        ya, yb = y[..., :2], y[..., 2:]

    normal = np.swapaxes(ya, -1, -2) @ ya
    proj = np.swapaxes(ya, -1, -2) @ yb
    lam = np.linalg.eigvalsh(normal)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(lam[..., 0] > 0, lam[..., 1] / lam[..., 0], np.inf)
    rank_bad = np.linalg.matrix_rank(a) < 2
    status[rank_bad & (status == OK)] = RANK_DEFICIENT

    bad = status != OK
    normal = np.where(bad[..., None, None], np.eye(2), normal)
    w = 0.5 * np.linalg.solve(normal, proj)
    w = np.where(bad[..., None, None], np.nan, w)
    if vector_rhs:
        w = w[..., 0]
    return w, cond, status


def _estimate(a, rhs, s, which: Estimator) -> Estimate:
    w, cond, status = wls_solve(a, rhs, s)
    if status == RANK_DEFICIENT:
        raise GeometryError("anchors are collinear: system matrix has rank < 2")
    if status == NOT_POSITIVE_DEFINITE:
        raise WeightError("weight matrix S is not positive definite")
    return Estimate(Point2.from_array(w), which, float(cond))


def solve_ls(system: LinearSystem) -> Estimate:
    return _estimate(system.a_matrix, system.b_vector, None, Estimator.LS)


def solve_wls(system: LinearSystem, weights: WeightModel) -> Estimate:
    return _estimate(system.a_matrix, system.b_vector, weights.s_matrix, Estimator.WLS)


def solve_bcwls(system: LinearSystem, weights: WeightModel) -> Estimate:
    return _estimate(
        system.a_matrix,
        system.b_vector - weights.c_vector,
        weights.s_matrix,
        Estimator.BCWLS,
    )


def solve_hyperbolic_baseline(
    system: LinearSystem,
    observations: Sequence[AnchorObservation],
    params: PathLossParams,
) -> Estimate:
    """WLS with distance-noise-only weights: anchors are taken as exactly known."""
    weights = weight_model(
        observations, params, system.reference_index, ignore_anchor_noise=True
    )
    return _estimate(
        system.a_matrix, system.b_vector, weights.s_matrix, Estimator.HYPERBOLIC
    )


def estimate_all(
    observations: Sequence[AnchorObservation],
    params: PathLossParams,
    reference_index: int = 0,
) -> dict[Estimator, Estimate]:
    """Run all four estimators on one observation set."""
    system = build_system(observations, params, reference_index)
    weights = weight_model(observations, params, reference_index)
    return {
        Estimator.LS: solve_ls(system),
        Estimator.WLS: solve_wls(system, weights),
        Estimator.BCWLS: solve_bcwls(system, weights),
        Estimator.HYPERBOLIC: solve_hyperbolic_baseline(system, observations, params),
    }
