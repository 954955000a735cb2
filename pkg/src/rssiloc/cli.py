"""Command-line front end.

    rssiloc simulate --config exp.json --out results.csv
    rssiloc crlb --config exp.json --out crlb.csv
    rssiloc estimate observations.csv [--eta 3.567 ...]

Exit codes: 0 success, 2 config/input error, 3 runtime or geometry error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

from rssiloc import __version__
from rssiloc.config import experiment_to_dict, parse_experiment, read_json, read_observations
from rssiloc.errors import ConfigError, InsufficientAnchorsError, LocalizationError
from rssiloc.estimators import estimate_all
from rssiloc.evaluate import crlb_curve, run_sweep, summarize
from rssiloc.model import PathLossParams

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

SIMULATE_COLUMNS = (
    "sigma_p_db", "estimator", "trials", "failures", "rmse_m", "bias_norm_m",
    "mean_err_x_m", "mean_err_y_m", "crlb_rmse_m", "seed",
)
CRLB_COLUMNS = ("sigma_p_db", "crlb_rmse_m", "fim_condition", "seed")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def simulate_csv(config) -> str:
    """Run the sweep and CRLB for ``config`` and render the results CSV."""
    cells = run_sweep(config)
    bounds = crlb_curve(config.topology, config.params, config.sigma_p_grid)
    rows = summarize(cells, bounds, seed=config.seed)
    return _csv_text(
        SIMULATE_COLUMNS,
        (
            (r.sigma_p_db, r.estimator.value, r.trials, r.failures, r.rmse_m,
             r.bias_norm_m, r.mean_err_x_m, r.mean_err_y_m, r.crlb_rmse_m, r.seed)
            for r in rows
        ),
    )


def crlb_csv(config) -> str:
    bounds = crlb_curve(config.topology, config.params, config.sigma_p_grid)
    return _csv_text(
        CRLB_COLUMNS,
        ((s, b.bound_rmse, b.fim_condition, config.seed) for s, b in bounds.items()),
    )


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def manifest_path(out: Path) -> Path:
    return out.with_name(out.stem + ".manifest.json")


def _write_outputs(args, config, text: str, started: str):
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, newline="")
    manifest = {
        "manifest_version": 1,
        "tool": "rssiloc",
        "tool_version": __version__,
        "command": args.command,
        "config_path": str(args.config),
        "resolved_seed": config.seed,
        "started_at": started,
        "finished_at": _now(),
        "outputs": [str(out)],
        "config": experiment_to_dict(config),
    }
    manifest_path(out).write_text(json.dumps(manifest, indent=2) + "\n")


def _log(args, msg: str):
    if not args.quiet:
        print(msg, file=sys.stderr)


def cmd_simulate(args) -> int:
    started = _now()
    config = parse_experiment(read_json(args.config), seed=args.seed, trials=args.trials)
    _log(args, f"simulating {len(config.sigma_p_grid)} noise levels x "
               f"{config.trials} trials, seed {config.seed}")
    _write_outputs(args, config, simulate_csv(config), started)
    return EXIT_OK


def cmd_crlb(args) -> int:
    started = _now()
    config = parse_experiment(read_json(args.config), seed=args.seed, trials=args.trials)
    _write_outputs(args, config, crlb_csv(config), started)
    return EXIT_OK


def cmd_estimate(args) -> int:
    observations = read_observations(args.observations)
    if len(observations) < 3:
        raise InsufficientAnchorsError(f"need at least 3 anchors, got {len(observations)}")
    try:
        params = PathLossParams(args.d0, args.p0, args.eta)
    except LocalizationError as exc:
        raise ConfigError(str(exc)) from None
    estimates = estimate_all(observations, params, args.reference_index)
    doc = {
        "anchors": len(observations),
        "reference_index": args.reference_index % len(observations),
        "path_loss": {"d0": params.d0, "p0_dbm": params.p0_dbm, "eta": params.eta},
        "estimates": {
            which.value: {
                "x": est.position.x,
                "y": est.position.y,
                "condition": est.condition if math.isfinite(est.condition) else None,
                "flagged": est.flagged,
            }
            for which, est in estimates.items()
        },
    }
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rssiloc",
        description="RSSI self-localization with noisy anchors: simulation, CRLB and estimation.",
    )
    parser.add_argument("--version", action="version", version=f"rssiloc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, metavar="PATH",
                           help="experiment config JSON (or a run manifest)")
            p.add_argument("--seed", type=int, default=None, help="override the config seed")
            p.add_argument("--trials", type=int, default=None, help="override the trial count")
        p.add_argument("--out", metavar="PATH", default=None,
                       help="output file (default: stdout, no manifest)")
        p.add_argument("--quiet", action="store_true", help="suppress progress messages")

    p = sub.add_parser("simulate", help="Monte Carlo RMSE/bias sweep to CSV")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("crlb", help="Cramer-Rao bound curve to CSV")
    common(p)
    p.set_defaults(func=cmd_crlb)

    p = sub.add_parser("estimate", help="estimate a position from an observations file")
    p.add_argument("observations", metavar="FILE",
                   help="CSV or JSON records of x, y, sigma_a, rssi_dbm, sigma_p")
    defaults = PathLossParams()
    p.add_argument("--d0", type=float, default=defaults.d0, help="reference distance (m)")
    p.add_argument("--p0", type=float, default=defaults.p0_dbm, help="power at d0 (dBm)")
    p.add_argument("--eta", type=float, default=defaults.eta, help="path-loss exponent")
    p.add_argument("--reference-index", type=int, default=0,
                   help="anchor subtracted from the others when linearizing")
    common(p, config_required=False)
    p.set_defaults(func=cmd_estimate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "trials", None) is not None and args.trials < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if getattr(args, "seed", None) is not None and args.seed < 0:
        print("error: --seed must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, InsufficientAnchorsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LocalizationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
