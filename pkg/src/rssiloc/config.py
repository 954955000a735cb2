"""JSON experiment configs and observation files.

Experiment config::

    {
      "topology": {
        "anchors": [{"x": 0, "y": 0, "sigma_a": 1.0}, ...],
        "blind": {"x": 2, "y": 3}
      },
      "path_loss": {"d0": 1.0, "p0_dbm": -33.44, "eta": 3.567},
      "sigma_p_grid": [0, 1, 2, 3, 4, 5],
      "trials": 10000,
      "seed": 0,
      "estimators": ["LS", "WLS", "BCWLS", "HYPERBOLIC-BASELINE"],
      "reference_index": 0
    }

Instead of a literal anchor list, ``topology`` may hold a generator::

    {"generator": {"arena": 40, "sigma_a": [5, 5, 5, 1, 1, 1],
                   "blind": "uniform", "seed": 7}}

``blind`` is ``"uniform"``, ``"center"`` or ``{"x": .., "y": ..}``. A run
manifest written by the CLI is also accepted as a config; its embedded
resolved config is used.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any

from rssiloc.errors import ConfigError, LocalizationError
from rssiloc.estimators import Estimator
from rssiloc.evaluate import ALL_ESTIMATORS, ExperimentConfig, random_topology
from rssiloc.model import (
    AnchorObservation,
    AnchorTruth,
    PathLossParams,
    Point2,
    RngStream,
    Topology,
)

# Stream id reserved for topology generation, disjoint from sweep streams.
TOPOLOGY_STREAM = 2**31 - 1

_TOP_KEYS = {
    "topology", "path_loss", "sigma_p_grid", "trials", "seed", "estimators",
    "reference_index",
}


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}" if path else msg)


def _number(value, path: str, *, minimum=None, positive=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        _fail(path, "must be finite")
    if positive and value <= 0:
        _fail(path, f"must be positive, got {value}")
    if minimum is not None and value < minimum:
        _fail(path, f"must be >= {minimum}, got {value}")
    return value


def _integer(value, path: str, *, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        _fail(path, f"must be >= {minimum}, got {value}")
    return value


def _mapping(value, path: str, allowed: set[str]) -> dict:
    if not isinstance(value, dict):
        _fail(path, f"expected an object, got {type(value).__name__}")
    unknown = sorted(set(value) - allowed)
    if unknown:
        _fail(path, f"unknown field(s) {', '.join(unknown)}")
    return value


def _point(value, path: str) -> Point2:
    value = _mapping(value, path, {"x", "y"})
    for key in ("x", "y"):
        if key not in value:
            _fail(f"{path}.{key}", "missing")
    return Point2(_number(value["x"], f"{path}.x"), _number(value["y"], f"{path}.y"))


def parse_json_text(text: str, source: str = "<config>") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"
        ) from None


def read_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read: {exc.strerror}") from None
    return parse_json_text(text, str(path))


def parse_params(raw) -> PathLossParams:
    raw = _mapping(raw if raw is not None else {}, "path_loss", {"d0", "p0_dbm", "eta"})
    defaults = PathLossParams()
    return PathLossParams(
        d0=_number(raw.get("d0", defaults.d0), "path_loss.d0", positive=True),
        p0_dbm=_number(raw.get("p0_dbm", defaults.p0_dbm), "path_loss.p0_dbm"),
        eta=_number(raw.get("eta", defaults.eta), "path_loss.eta", positive=True),
    )


def parse_topology(raw) -> Topology:
    raw = _mapping(raw, "topology", {"anchors", "blind", "generator"})
    if "generator" in raw:
        if "anchors" in raw or "blind" in raw:
            _fail("topology", "give either 'generator' or 'anchors'/'blind', not both")
        gen = _mapping(raw["generator"], "topology.generator", {"arena", "sigma_a", "blind", "seed"})
        if "sigma_a" not in gen or not isinstance(gen["sigma_a"], list):
            _fail("topology.generator.sigma_a", "expected a list of per-anchor sigma_a values")
        sigma_a = [
            _number(s, f"topology.generator.sigma_a[{i}]", minimum=0)
            for i, s in enumerate(gen["sigma_a"])
        ]
        if len(sigma_a) < 3:
            _fail("topology.generator.sigma_a", f"need at least 3 anchors, got {len(sigma_a)}")
        arena = _number(gen.get("arena", 40.0), "topology.generator.arena", positive=True)
        blind = gen.get("blind", "uniform")
        if isinstance(blind, dict):
            blind = _point(blind, "topology.generator.blind")
        elif blind not in ("uniform", "center"):
            _fail("topology.generator.blind", f"expected 'uniform', 'center' or a point, got {blind!r}")
        seed = _integer(gen.get("seed", 0), "topology.generator.seed", minimum=0)
        return random_topology(RngStream(seed, TOPOLOGY_STREAM), sigma_a, arena, blind)

    anchors_raw = raw.get("anchors")
    if not isinstance(anchors_raw, list):
        _fail("topology.anchors", "expected a list of anchors")
    if len(anchors_raw) < 3:
        _fail("topology.anchors", f"need at least 3 anchors, got {len(anchors_raw)}")
    anchors = []
    for i, a in enumerate(anchors_raw):
        path = f"topology.anchors[{i}]"
        a = _mapping(a, path, {"x", "y", "sigma_a"})
        pos = _point({k: a[k] for k in ("x", "y") if k in a}, path)
        anchors.append(AnchorTruth(pos, _number(a.get("sigma_a", 0.0), f"{path}.sigma_a", minimum=0)))
    if "blind" not in raw:
        _fail("topology.blind", "missing")
    return Topology(tuple(anchors), _point(raw["blind"], "topology.blind"))


def parse_experiment(raw, *, seed: int | None = None, trials: int | None = None) -> ExperimentConfig:
    """Validate a config document; ``seed``/``trials`` override the file values."""
    if isinstance(raw, dict) and "manifest_version" in raw:
        raw = raw.get("config")
    raw = _mapping(raw, "", _TOP_KEYS)
    if "topology" not in raw:
        _fail("topology", "missing")
    grid = raw.get("sigma_p_grid", [0, 1, 2, 3, 4, 5])
    if not isinstance(grid, list) or not grid:
        _fail("sigma_p_grid", "expected a non-empty list")
    estimators = raw.get("estimators", [e.value for e in ALL_ESTIMATORS])
    if not isinstance(estimators, list) or not estimators:
        _fail("estimators", "expected a non-empty list")
    try:
        est = tuple(Estimator(e) for e in estimators)
    except ValueError:
        _fail("estimators", f"unknown estimator in {estimators!r}; choose from "
              + ", ".join(e.value for e in Estimator))
    try:
        return ExperimentConfig(
            topology=parse_topology(raw["topology"]),
            params=parse_params(raw.get("path_loss")),
            sigma_p_grid=tuple(
                _number(s, f"sigma_p_grid[{i}]", minimum=0) for i, s in enumerate(grid)
            ),
            trials=trials if trials is not None else _integer(raw.get("trials", 10_000), "trials", minimum=1),
            seed=seed if seed is not None else _integer(raw.get("seed", 0), "seed", minimum=0),
            estimators=est,
            reference_index=_integer(raw.get("reference_index", 0), "reference_index"),
        )
    except ConfigError:
        raise
    except LocalizationError as exc:
        raise ConfigError(str(exc)) from None


def experiment_to_dict(config: ExperimentConfig) -> dict:
    """Resolved, literal form of a config; parsing it back reproduces ``config``."""
    t = config.topology
    return {
        "topology": {
            "anchors": [
                {"x": a.position.x, "y": a.position.y, "sigma_a": a.sigma_a} for a in t.anchors
            ],
            "blind": {"x": t.blind.x, "y": t.blind.y},
        },
        "path_loss": {"d0": config.params.d0, "p0_dbm": config.params.p0_dbm, "eta": config.params.eta},
        "sigma_p_grid": list(config.sigma_p_grid),
        "trials": config.trials,
        "seed": config.seed,
        "estimators": [e.value for e in config.estimators],
        "reference_index": config.reference_index,
    }


OBSERVATION_FIELDS = ("x", "y", "sigma_a", "rssi_dbm", "sigma_p")


def _observation(record: dict, where: str) -> AnchorObservation:
    missing = [k for k in OBSERVATION_FIELDS if record.get(k) in (None, "")]
    if missing:
        _fail(where, f"missing field(s) {', '.join(missing)}")
    vals = {}
    for k in OBSERVATION_FIELDS:
        v = record[k]
        if isinstance(v, str):
            try:
                v = float(v)
            except ValueError:
                _fail(f"{where}.{k}", f"not a number: {v!r}")
        vals[k] = _number(v, f"{where}.{k}", minimum=0 if k.startswith("sigma") else None)
    return AnchorObservation(
        Point2(vals["x"], vals["y"]), vals["sigma_a"], vals["rssi_dbm"], vals["sigma_p"]
    )


def read_observations(path: str | Path) -> list[AnchorObservation]:
    """Load ``x, y, sigma_a, rssi_dbm, sigma_p`` records from CSV or JSON.

    CSV needs a header row. JSON is a list of objects or ``{"observations": [...]}``.
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        raw = read_json(path)
        if isinstance(raw, dict):
            raw = raw.get("observations")
        if not isinstance(raw, list):
            _fail(str(path), "expected a list of observation records")
        out = []
        for i, rec in enumerate(raw):
            if not isinstance(rec, dict):
                _fail(f"{path}: record {i}", "expected an object")
            out.append(_observation(rec, f"{path}: record {i}"))
        return out
    try:
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [k for k in OBSERVATION_FIELDS if k not in header]
            if missing:
                _fail(f"{path}:1", f"header lacks column(s) {', '.join(missing)}")
            return [
                _observation(rec, f"{path}:{reader.line_num}")
                for rec in reader
            ]
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read: {exc.strerror}") from None
