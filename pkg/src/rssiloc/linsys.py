"""Linearized multilateration system, its RHS covariance and bias vector.

Subtracting the circle equation of a reference anchor ``r`` from the others
gives ``2 A w = b`` with rows (for every anchor ``i != r``, in index order)::

    A_i = (x_i - x_r, y_i - y_r)
    b_i = d_r**2 - d_i**2 + k_i - k_r,     k_i = x_i**2 + y_i**2

The array kernels (``assemble``, ``covariance_matrix``, ``bias_vector``) accept
arbitrary leading batch dimensions: positions ``(..., M, 2)``, per-anchor
vectors ``(..., M)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from rssiloc import moments
from rssiloc.errors import DomainError, InsufficientAnchorsError
from rssiloc.model import (
    AnchorObservation,
    PathLossParams,
    distance_from_rssi,
    observations_to_arrays,
)


def _others(m: int, reference_index: int) -> np.ndarray:
    if m < 3:
        raise InsufficientAnchorsError(f"need at least 3 anchors, got {m}")
    if not -m <= reference_index < m:
        raise DomainError(f"reference_index {reference_index} out of range for {m} anchors")
    ref = reference_index % m
    return np.array([i for i in range(m) if i != ref]), ref


def assemble(positions, distances, reference_index: int = 0):
    """Return ``(A, b)`` of shapes ``(..., M-1, 2)`` and ``(..., M-1)``."""
    positions = np.asarray(positions, dtype=float)
    distances = np.asarray(distances, dtype=float)
    rows, ref = _others(positions.shape[-2], reference_index)
    k = np.sum(np.square(positions), axis=-1)
    d2 = np.square(distances)
    a = positions[..., rows, :] - positions[..., ref : ref + 1, :]
    b = d2[..., ref : ref + 1] - d2[..., rows] + k[..., rows] - k[..., ref : ref + 1]
    return a, b


def covariance_matrix(positions, distances, sigma_a, sigma_p, eta, reference_index: int = 0):
    """Covariance of ``b``: ``alpha * J + diag(beta)``.

    ``alpha = Var(k_r) + Var(d_r**2)`` is shared by every entry through the
    reference anchor; ``beta_i = Var(k_i) + Var(d_i**2)``.
    """
    positions = np.asarray(positions, dtype=float)
    rows, ref = _others(positions.shape[-2], reference_index)
    v = moments.var_k(positions[..., 0], positions[..., 1], sigma_a) + moments.var_d2(
        distances, eta, sigma_p
    )
    v = np.broadcast_to(v, positions.shape[:-1])
    n = len(rows)
    alpha = v[..., ref][..., None, None]
    return alpha * np.ones((n, n)) + v[..., rows][..., None, :] * np.eye(n)


def bias_vector(distances, sigma_a, sigma_p, eta, reference_index: int = 0):
    """Expected excess of ``b`` over its noiseless value.

    Entry for anchor ``i``: ``f_r d_r**2 - f_i d_i**2 + 2 (sigma_a_i**2 - sigma_a_r**2)``
    with ``f = u**2 sigma_p**2 + u**4 sigma_p**4 / 2`` evaluated per anchor.
    """
    distances = np.asarray(distances, dtype=float)
    rows, ref = _others(distances.shape[-1], reference_index)
    g = moments.d2_inflation_taylor(eta, sigma_p) * np.square(distances)
    s2 = np.broadcast_to(np.square(np.asarray(sigma_a, dtype=float)), distances.shape)
    g = np.broadcast_to(g, distances.shape)
    return (
        g[..., ref : ref + 1] - g[..., rows]
        + 2.0 * (s2[..., rows] - s2[..., ref : ref + 1])
    )


@dataclass(frozen=True)
class LinearSystem:
    a_matrix: np.ndarray
    b_vector: np.ndarray
    reference_index: int = 0

    def __post_init__(self):
        a = np.asarray(self.a_matrix, dtype=float)
        b = np.asarray(self.b_vector, dtype=float)
        if a.ndim != 2 or a.shape[1] != 2 or b.shape != (a.shape[0],):
            raise DomainError(f"bad system shapes A{a.shape} b{b.shape}")
        if a.shape[0] < 2:
            raise InsufficientAnchorsError("a linear system needs at least 2 rows")
        object.__setattr__(self, "a_matrix", a)
        object.__setattr__(self, "b_vector", b)

    @property
    def row_anchors(self) -> list[int]:
        """Anchor index behind each row: every anchor except the reference, in order."""
        m = self.a_matrix.shape[0] + 1
        return [i for i in range(m) if i != self.reference_index]


@dataclass(frozen=True)
class WeightModel:
    """RHS covariance ``S`` and bias vector ``c`` of one linear system."""

    s_matrix: np.ndarray
    c_vector: np.ndarray

    @property
    def is_zero(self) -> bool:
        """True when ``S`` vanishes (noiseless data); WLS then reduces to LS."""
        return not np.any(self.s_matrix)


def _arrays(observations: Sequence[AnchorObservation], params: PathLossParams):
    positions, rssi, sigma_a, sigma_p = observations_to_arrays(observations)
    if len(observations) < 3:
        raise InsufficientAnchorsError(f"need at least 3 anchors, got {len(observations)}")
    return positions, distance_from_rssi(params, rssi), sigma_a, sigma_p


def build_system(
    observations: Sequence[AnchorObservation],
    params: PathLossParams,
    reference_index: int = 0,
) -> LinearSystem:
    positions, d, _, _ = _arrays(observations, params)
    a, b = assemble(positions, d, reference_index)
    return LinearSystem(a, b, reference_index % len(observations))


def covariance_s(
    observations: Sequence[AnchorObservation],
    params: PathLossParams,
    reference_index: int = 0,
) -> np.ndarray:
    """``S`` with every moment evaluated at the observed (plug-in) values."""
    positions, d, sigma_a, sigma_p = _arrays(observations, params)
    return covariance_matrix(positions, d, sigma_a, sigma_p, params.eta, reference_index)


def bias_c(
    observations: Sequence[AnchorObservation],
    params: PathLossParams,
    reference_index: int = 0,
) -> np.ndarray:
    _, d, sigma_a, sigma_p = _arrays(observations, params)
    return bias_vector(d, sigma_a, sigma_p, params.eta, reference_index)


def weight_model(
    observations: Sequence[AnchorObservation],
    params: PathLossParams,
    reference_index: int = 0,
    ignore_anchor_noise: bool = False,
) -> WeightModel:
    """Bundle ``S`` and ``c``; ``ignore_anchor_noise`` forces every sigma_a to 0."""
    positions, d, sigma_a, sigma_p = _arrays(observations, params)
    if ignore_anchor_noise:
        sigma_a = np.zeros_like(sigma_a)
    s = covariance_matrix(positions, d, sigma_a, sigma_p, params.eta, reference_index)
    c = bias_vector(d, sigma_a, sigma_p, params.eta, reference_index)
    return WeightModel(s, c)
