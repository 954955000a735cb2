import csv
import json
import math

import numpy as np
import pytest

from rssiloc.cli import CRLB_COLUMNS, SIMULATE_COLUMNS, main, manifest_path
from rssiloc.evaluate import known_anchor_crlb
from rssiloc.model import PathLossParams, mean_rssi

from conftest import make_topology

FIG1_CONFIG = {
    "topology": {"generator": {"arena": 40, "sigma_a": [5, 5, 5, 1, 1, 1], "blind": "uniform", "seed": 3}},
    "path_loss": {"d0": 1.0, "p0_dbm": -33.44, "eta": 3.567},
    "sigma_p_grid": [0, 1, 2, 3, 4, 5],
    "trials": 500,
    "seed": 11,
}

LITERAL_ANCHORS = [
    {"x": 4.0, "y": 6.0, "sigma_a": 0.0},
    {"x": 35.0, "y": 3.0, "sigma_a": 0.0},
    {"x": 37.0, "y": 30.0, "sigma_a": 0.0},
    {"x": 20.0, "y": 38.0, "sigma_a": 0.0},
]


def write_json(path, doc):
    path.write_text(json.dumps(doc, indent=2))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_fig1_shape(tmp_path):
    cfg = write_json(tmp_path / "fig1.json", FIG1_CONFIG)
    out = tmp_path / "res.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    rows = read_csv(out)
    assert tuple(rows[0].keys()) == SIMULATE_COLUMNS
    assert len(rows) == 6 * 4
    for row in rows:
        for col in SIMULATE_COLUMNS:
            if col != "estimator":
                assert math.isfinite(float(row[col])), (col, row[col])
        assert row["seed"] == "11"
        assert int(row["trials"]) == 500
        assert float(row["rmse_m"]) >= float(row["bias_norm_m"])
    assert {r["estimator"] for r in rows} == {"LS", "WLS", "BCWLS", "HYPERBOLIC-BASELINE"}

    manifest = json.loads(manifest_path(out).read_text())
    assert manifest["resolved_seed"] == 11
    assert manifest["outputs"] == [str(out)]
    assert manifest["started_at"] <= manifest["finished_at"]


def test_simulate_zero_noise(tmp_path):
    cfg = write_json(tmp_path / "c.json", {
        "topology": {"anchors": LITERAL_ANCHORS, "blind": {"x": 18, "y": 21}},
        "sigma_p_grid": [0], "trials": 100,
    })
    out = tmp_path / "res.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    rows = read_csv(out)
    assert len(rows) == 4
    assert all(float(r["rmse_m"]) < 1e-9 for r in rows)
    assert all(float(r["crlb_rmse_m"]) == 0.0 for r in rows)


def test_simulate_is_byte_identical_and_manifest_reproduces(tmp_path):
    cfg = write_json(tmp_path / "fig1.json", FIG1_CONFIG)
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    main(["simulate", "--config", str(cfg), "--out", str(a), "--quiet"])
    main(["simulate", "--config", str(cfg), "--out", str(b), "--quiet"])
    assert a.read_bytes() == b.read_bytes()
    main(["simulate", "--config", str(manifest_path(a)), "--out", str(c), "--quiet"])
    assert a.read_bytes() == c.read_bytes()


def test_simulate_overrides(tmp_path):
    cfg = write_json(tmp_path / "fig1.json", FIG1_CONFIG)
    out = tmp_path / "o.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--seed", "99", "--trials", "50", "--quiet"]) == 0
    rows = read_csv(out)
    assert {r["seed"] for r in rows} == {"99"}
    assert {r["trials"] for r in rows} == {"50"}
    assert json.loads(manifest_path(out).read_text())["resolved_seed"] == 99


def test_simulate_stdout(tmp_path, capsys):
    cfg = write_json(tmp_path / "fig1.json", dict(FIG1_CONFIG, trials=20, sigma_p_grid=[1]))
    assert main(["simulate", "--config", str(cfg), "--quiet"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].split(",") == list(SIMULATE_COLUMNS)
    assert len(lines) == 5


def test_invalid_json_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "trials": 10,\n  "seed": ,\n}\n')
    assert main(["simulate", "--config", str(bad)]) == 2
    assert "bad.json:3:" in capsys.readouterr().err


@pytest.mark.parametrize(
    "patch, fragment",
    [
        ({"trials": 0}, "trials"),
        ({"sigma_p_grid": [1, -2]}, "sigma_p_grid[1]"),
        ({"estimators": ["LS", "KALMAN"]}, "estimators"),
        ({"bogus": 1}, "bogus"),
        ({"topology": {"anchors": LITERAL_ANCHORS[:2], "blind": {"x": 1, "y": 1}}}, "at least 3"),
        ({"topology": {"anchors": [dict(LITERAL_ANCHORS[0], sigma_a="x")] * 3, "blind": {"x": 1, "y": 1}}},
         "topology.anchors[0].sigma_a"),
        ({"path_loss": {"eta": 0}}, "path_loss.eta"),
    ],
)
def test_config_validation_errors(tmp_path, capsys, patch, fragment):
    cfg = write_json(tmp_path / "c.json", dict(FIG1_CONFIG, **patch))
    assert main(["simulate", "--config", str(cfg), "--quiet"]) == 2
    assert fragment in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.json")]) == 2


def write_observations(path, points, blind, sigma_a=0.0, sigma_p=0.0):
    params = PathLossParams()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "sigma_a", "rssi_dbm", "sigma_p"])
        for x, y in points:
            d = math.dist((x, y), blind)
            w.writerow([x, y, sigma_a, repr(mean_rssi(params, d)), sigma_p])
    return path


def test_estimate_noiseless(tmp_path, capsys):
    obs = write_observations(tmp_path / "obs.csv", [(0, 0), (10, 0), (0, 10), (9, 9)], (2, 3))
    assert main(["estimate", str(obs)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc["estimates"]) == {"LS", "WLS", "BCWLS", "HYPERBOLIC-BASELINE"}
    for est in doc["estimates"].values():
        assert est["x"] == pytest.approx(2.0, abs=1e-9)
        assert est["y"] == pytest.approx(3.0, abs=1e-9)


def test_estimate_json_input_and_out_file(tmp_path):
    params = PathLossParams()
    recs = [
        {"x": x, "y": y, "sigma_a": 1.0, "rssi_dbm": mean_rssi(params, math.dist((x, y), (5, 5))), "sigma_p": 2.0}
        for x, y in [(0, 0), (10, 0), (0, 10), (10, 10)]
    ]
    src = write_json(tmp_path / "obs.json", {"observations": recs})
    out = tmp_path / "est.json"
    assert main(["estimate", str(src), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["anchors"] == 4
    assert doc["estimates"]["LS"]["x"] == pytest.approx(5.0, abs=1e-9)


def test_estimate_two_records_fails(tmp_path, capsys):
    obs = write_observations(tmp_path / "obs.csv", [(0, 0), (10, 0)], (2, 3))
    assert main(["estimate", str(obs)]) == 2
    assert "at least 3" in capsys.readouterr().err


def test_estimate_malformed_record(tmp_path, capsys):
    path = tmp_path / "obs.csv"
    path.write_text("x,y,sigma_a,rssi_dbm,sigma_p\n0,0,0,-50,0\n1,zz,0,-50,0\n")
    assert main(["estimate", str(path)]) == 2
    assert "obs.csv:3" in capsys.readouterr().err
    path.write_text("x,y,rssi_dbm\n0,0,-50\n")
    assert main(["estimate", str(path)]) == 2


def test_estimate_collinear_fails(tmp_path, capsys):
    obs = write_observations(tmp_path / "obs.csv", [(0, 0), (5, 0), (10, 0)], (3, 4))
    assert main(["estimate", str(obs)]) == 3
    assert "collinear" in capsys.readouterr().err


def test_estimate_zero_anchor_noise_wls_equals_baseline(tmp_path, capsys):
    params = PathLossParams()
    rng = np.random.default_rng(0)
    path = tmp_path / "obs.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "sigma_a", "rssi_dbm", "sigma_p"])
        for x, y in [(0, 0), (30, 2), (28, 33), (3, 25), (15, 40)]:
            d = math.dist((x, y), (12, 17))
            w.writerow([x, y, 0.0, mean_rssi(params, d) + rng.normal(0, 3), 3.0])
    assert main(["estimate", str(path)]) == 0
    est = json.loads(capsys.readouterr().out)["estimates"]
    assert est["WLS"]["x"] == est["HYPERBOLIC-BASELINE"]["x"]
    assert est["WLS"]["y"] == est["HYPERBOLIC-BASELINE"]["y"]


def test_crlb_known_anchor_limit(tmp_path):
    cfg = write_json(tmp_path / "c.json", {
        "topology": {"anchors": LITERAL_ANCHORS, "blind": {"x": 18, "y": 21}},
        "sigma_p_grid": [1, 2, 3, 4, 5],
    })
    out = tmp_path / "crlb.csv"
    assert main(["crlb", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    rows = read_csv(out)
    assert tuple(rows[0].keys()) == CRLB_COLUMNS
    topo = make_topology([(a["x"], a["y"]) for a in LITERAL_ANCHORS], (18, 21))
    for row in rows:
        ref = known_anchor_crlb(topo, PathLossParams(), float(row["sigma_p_db"]))
        assert float(row["crlb_rmse_m"]) == pytest.approx(ref, rel=1e-6)
    assert manifest_path(out).exists()


def test_crlb_monotone_column(tmp_path):
    cfg = write_json(tmp_path / "c.json", dict(FIG1_CONFIG, sigma_p_grid=[0, 0.5, 1, 2, 3, 4, 5, 6]))
    out = tmp_path / "crlb.csv"
    assert main(["crlb", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    bounds = [float(r["crlb_rmse_m"]) for r in read_csv(out)]
    assert all(b2 >= b1 for b1, b2 in zip(bounds, bounds[1:]))


def test_crlb_collinear_exits_3(tmp_path, capsys):
    anchors = [{"x": 0, "y": 0, "sigma_a": 1}, {"x": 5, "y": 0, "sigma_a": 1}, {"x": 10, "y": 0, "sigma_a": 1}]
    cfg = write_json(tmp_path / "c.json", {"topology": {"anchors": anchors, "blind": {"x": 3, "y": 4}}})
    assert main(["crlb", "--config", str(cfg), "--quiet"]) == 3
    assert "collinear" in capsys.readouterr().err
