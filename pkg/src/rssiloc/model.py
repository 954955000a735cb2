"""Ground truth, channel model and the two noise processes.

RSSI follows log-normal shadowing: the received power in dBm is Gaussian about
``p0 - 10 * eta * log10(d / d0)``. Anchor positions reported to the blind node
carry additive zero-mean Gaussian noise with one standard deviation per anchor,
shared by both axes.

Everything here is pure given an explicit :class:`RngStream`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from rssiloc.errors import DomainError, InsufficientAnchorsError

LN10 = math.log(10.0)


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class Point2:
    """A 2-D coordinate in meters."""

    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", _check_finite("x", self.x))
        object.__setattr__(self, "y", _check_finite("y", self.y))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @classmethod
    def from_array(cls, xy) -> Point2:
        return cls(float(xy[0]), float(xy[1]))


@dataclass(frozen=True)
class PathLossParams:
    """Log-distance path loss: reference distance (m), power at it (dBm), exponent."""

    d0: float = 1.0
    p0_dbm: float = -33.44
    eta: float = 3.567

    def __post_init__(self):
        for name in ("d0", "p0_dbm", "eta"):
            _check_finite(name, getattr(self, name))
        if self.d0 <= 0:
            raise DomainError(f"d0 must be positive, got {self.d0}")
        if self.eta <= 0:
            raise DomainError(f"eta must be positive, got {self.eta}")


def _check_sigma(name: str, value: float) -> float:
    value = _check_finite(name, value)
    if value < 0:
        raise DomainError(f"{name} must be non-negative, got {value}")
    return value


@dataclass(frozen=True)
class AnchorTruth:
    position: Point2
    sigma_a: float = 0.0
    sigma_p: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "sigma_a", _check_sigma("sigma_a", self.sigma_a))
        object.__setattr__(self, "sigma_p", _check_sigma("sigma_p", self.sigma_p))


@dataclass(frozen=True)
class AnchorObservation:
    """What the blind node holds for one anchor."""

    observed_position: Point2
    sigma_a: float
    rssi_dbm: float
    sigma_p: float

    def __post_init__(self):
        object.__setattr__(self, "sigma_a", _check_sigma("sigma_a", self.sigma_a))
        object.__setattr__(self, "sigma_p", _check_sigma("sigma_p", self.sigma_p))
        object.__setattr__(self, "rssi_dbm", _check_finite("rssi_dbm", self.rssi_dbm))


@dataclass(frozen=True)
class Topology:
    anchors: tuple[AnchorTruth, ...]
    blind: Point2

    def __post_init__(self):
        object.__setattr__(self, "anchors", tuple(self.anchors))
        if len(self.anchors) < 3:
            raise InsufficientAnchorsError(
                f"need at least 3 anchors, got {len(self.anchors)}"
            )

    @property
    def anchor_positions(self) -> np.ndarray:
        """(M, 2) array of true anchor coordinates."""
        return np.array([[a.position.x, a.position.y] for a in self.anchors])

    @property
    def sigma_a(self) -> np.ndarray:
        return np.array([a.sigma_a for a in self.anchors])

    @property
    def sigma_p(self) -> np.ndarray:
        return np.array([a.sigma_p for a in self.anchors])

    def distances(self) -> np.ndarray:
        """True blind-to-anchor distances, shape (M,)."""
        return np.hypot(*(self.anchor_positions - self.blind.as_array()).T)

    def with_sigma_p(self, sigma_p: float) -> Topology:
        """Copy with every anchor's RSSI noise set to ``sigma_p``."""
        anchors = tuple(
            AnchorTruth(a.position, a.sigma_a, sigma_p) for a in self.anchors
        )
        return Topology(anchors, self.blind)


class RngStream:
    """Seeded, splittable random stream backed by the counter-based Philox generator.

    ``(seed, stream_id)`` fully determines the draw sequence. ``stream_id`` may be
    an int or a tuple of ints, so e.g. ``(grid_index, chunk_index)`` names an
    independent stream without any coordination between workers.
    """

    def __init__(self, seed: int, stream_id: int | Sequence[int] = 0):
        self.seed = int(seed)
        if isinstance(stream_id, (int, np.integer)):
            key = (int(stream_id),)
        else:
            key = tuple(int(k) for k in stream_id)
        self.stream_id = key
        seq = np.random.SeedSequence(self.seed, spawn_key=key)
        self.generator = np.random.Generator(np.random.Philox(seq))

    def substream(self, *ids: int) -> RngStream:
        """Independent stream keyed by this stream's id extended with ``ids``."""
        return type(self)(self.seed, self.stream_id + tuple(ids))

    def standard_normal(self, size=None) -> np.ndarray:
        return self.generator.standard_normal(size)

    def uniform(self, low=0.0, high=1.0, size=None) -> np.ndarray:
        return self.generator.uniform(low, high, size)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def mean_rssi(params: PathLossParams, distance):
    """Mean received power (dBm) at ``distance`` meters.

    Accepts scalars or arrays. Raises DomainError for non-positive distances.
    """
    d = np.asarray(distance, dtype=float)
    if np.any(~(d > 0)):
        raise DomainError("distance must be positive")
    out = params.p0_dbm - 10.0 * params.eta * np.log10(d / params.d0)
    return float(out) if out.ndim == 0 else out


def sample_rssi(params: PathLossParams, true_distance, sigma_p, rng: RngStream):
    """One shadowed RSSI draw per distance: ``mean_rssi + N(0, sigma_p**2)``."""
    mean = np.asarray(mean_rssi(params, true_distance))
    sigma_p = np.asarray(sigma_p, dtype=float)
    if np.any(sigma_p < 0):
        raise DomainError("sigma_p must be non-negative")
    out = mean + sigma_p * rng.standard_normal(np.broadcast(mean, sigma_p).shape)
    return float(out) if out.ndim == 0 else out


def distance_from_rssi(params: PathLossParams, rssi_dbm):
    """Invert the path-loss law: ``d0 * 10 ** ((p0 - rssi) / (10 * eta))``."""
    p = np.asarray(rssi_dbm, dtype=float)
    if not np.all(np.isfinite(p)):
        raise DomainError("rssi must be finite")
    out = params.d0 * np.power(10.0, (params.p0_dbm - p) / (10.0 * params.eta))
    return float(out) if out.ndim == 0 else out


def perturb_anchor(truth: AnchorTruth, rng: RngStream) -> Point2:
    """Reported position of one anchor: true position plus N(0, sigma_a**2) per axis."""
    n = rng.standard_normal(2)
    return Point2(
        truth.position.x + truth.sigma_a * n[0],
        truth.position.y + truth.sigma_a * n[1],
    )


def _check_not_coincident(distances: np.ndarray):
    if np.any(distances <= 0):
        idx = int(np.flatnonzero(distances <= 0)[0])
        raise DomainError(f"blind node coincides with anchor {idx}")


def observe_arrays(
    topology: Topology,
    params: PathLossParams,
    rng: RngStream,
    n_trials: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized observation draw.

    Returns ``(positions, rssi)`` with shapes ``(..., M, 2)`` and ``(..., M)``;
    the leading axis is present only when ``n_trials`` is given. One block of
    standard normals of shape ``(..., M, 3)`` is consumed per call, laid out as
    (x noise, y noise, RSSI noise) per anchor.
    """
    d = topology.distances()
    _check_not_coincident(d)
    m = len(topology.anchors)
    shape = (m, 3) if n_trials is None else (int(n_trials), m, 3)
    z = rng.standard_normal(shape)
    sigma_a = topology.sigma_a
    positions = topology.anchor_positions + sigma_a[:, None] * z[..., :2]
    rssi = np.asarray(mean_rssi(params, d)) + topology.sigma_p * z[..., 2]
    return positions, rssi


def observe(
    topology: Topology, params: PathLossParams, rng: RngStream
) -> list[AnchorObservation]:
    """One perturbed position and one RSSI sample per anchor."""
    positions, rssi = observe_arrays(topology, params, rng)
    return [
        AnchorObservation(Point2.from_array(pos), a.sigma_a, float(p), a.sigma_p)
        for a, pos, p in zip(topology.anchors, positions, rssi)
    ]


def observations_to_arrays(observations: Sequence[AnchorObservation]):
    """Split observations into positions (M, 2), rssi, sigma_a and sigma_p arrays."""
    positions = np.array(
        [[o.observed_position.x, o.observed_position.y] for o in observations],
        dtype=float,
    ).reshape(-1, 2)
    rssi = np.array([o.rssi_dbm for o in observations], dtype=float)
    sigma_a = np.array([o.sigma_a for o in observations], dtype=float)
    sigma_p = np.array([o.sigma_p for o in observations], dtype=float)
    return positions, rssi, sigma_a, sigma_p
