import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from fracpar.bases import build_eigensystem, operator_spec
from fracpar.cli import main
from fracpar.fracop import TimeGrid, random_field
from fracpar.io import load_field, save_field
from fracpar.runner import ConfigError, load_config, run_config

SMALL_HARNACK = """
[run]
experiments = interior, boundary

[grids]
resolutions = 64x15, 128x31

[ensemble]
trials = 3

[experiment:interior]
type = harnack
values = 0.5

[experiment:boundary]
type = boundary_harnack
period = 8.0
values = 0.5
"""


@pytest.fixture
def runner():
    return CliRunner()


def _write(path, text):
    path.write_text(text)
    return str(path)


def test_empty_experiment_list(tmp_path):
    cfg = _write(tmp_path / "empty.cfg", "[run]\nexperiments =\n")
    res = run_config(cfg, tmp_path / "out")
    assert res.exit_code == 0
    assert res.manifest["experiments"] == []
    assert json.loads((tmp_path / "out" / "manifest.json").read_text())["experiments"] == []


@pytest.mark.parametrize(
    "text, key",
    [
        ("[run]\nexperiments = a\n\n[experiment:a]\ntype = harnack\nvalues = 0.5\ntrails = 3\n", "trails"),
        ("[run]\nexperiments = a\n\n[experiment:a]\ntype = harnack\nvalues = half\n", "values"),
        ("[run]\nexperiments = a\n\n[experiment:a]\ntype = nonsense\n", "type"),
        ("[grids]\nresolutions = 64-31\n\n[run]\nexperiments =\n", "resolutions"),
    ],
)
def test_malformed_config(tmp_path, runner, text, key):
    cfg = _write(tmp_path / "bad.cfg", text)
    with pytest.raises(ConfigError, match=key):
        load_config(cfg)
    res = runner.invoke(main, ["harnack", "--config", cfg, "--out-dir", str(tmp_path)])
    assert res.exit_code == 2
    assert key in res.output


def test_expressions_in_numbers(tmp_path):
    cfg = _write(tmp_path / "c.cfg", "[geometry]\ncenter = pi/2\nr = pi/8\n\n[run]\nexperiments =\n")
    glob, exps = load_config(cfg)
    assert glob["center"] == pytest.approx(np.pi / 2)
    assert glob["r"] == pytest.approx(np.pi / 8)
    assert exps == []


def test_harnack_commands(tmp_path, runner):
    cfg = _write(tmp_path / "h.cfg", SMALL_HARNACK)
    res = runner.invoke(main, ["harnack", "--config", cfg, "--out-dir", str(tmp_path / "h")])
    assert res.exit_code == 0, res.output
    with open(tmp_path / "h" / "results.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6 and {r["experiment"] for r in rows} == {"interior"}
    res = runner.invoke(main, ["boundary-harnack", "--config", cfg, "--out-dir", str(tmp_path / "b")])
    assert res.exit_code == 0, res.output
    man = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert [e["name"] for e in man["experiments"]] == ["boundary"]
    report = man["experiments"][0]["reports"][0]["report"]
    assert report["label"] == "empirical ratio"
    assert set(report["t0_trend"]) == {"1.25", "1.5", "1.75"}


def test_apply_routes(tmp_path, runner):
    es = build_eigensystem(operator_spec("interval_dirichlet"), modes=8, grid_size=32)
    tg = TimeGrid(16, 4.0)
    rng = np.random.default_rng(0)
    u, v = random_field(tg, es, rng), random_field(tg, es, rng)
    save_field(u, tmp_path / "u.bin")
    save_field(v, tmp_path / "v.bin")
    outs = {}
    for route in ("multiplier", "semigroup"):
        res = runner.invoke(main, ["apply", "--op", "interval_dirichlet", "--s", "0.5", "--route", route, "--in", str(tmp_path / "u.bin"), "--out", str(tmp_path / f"{route}.bin")])
        assert res.exit_code == 0, res.output
        outs[route] = load_field(tmp_path / f"{route}.bin").values
    assert np.linalg.norm(outs["semigroup"] - outs["multiplier"]) < 1e-6 * np.linalg.norm(outs["multiplier"])
    res = runner.invoke(main, ["apply", "--op", "interval_dirichlet", "--s", "0.5", "--route", "master", "--in", str(tmp_path / "u.bin"), "--against", str(tmp_path / "v.bin"), "--out", str(tmp_path / "m.json")])
    assert res.exit_code == 0, res.output
    rep = json.loads((tmp_path / "m.json").read_text())
    ref = tg.dt * float(np.sum(outs["multiplier"] * v.values * es.w))
    assert abs(rep["value"] - ref) < 1e-3 * abs(ref)
    res = runner.invoke(main, ["apply", "--op", "hermite", "--s", "0.5", "--in", str(tmp_path / "u.bin"), "--out", str(tmp_path / "x.bin")])
    assert res.exit_code == 2


def test_extend_and_trace_check(tmp_path, runner):
    es = build_eigensystem(operator_spec("interval_dirichlet"), modes=8, grid_size=32)
    save_field(random_field(TimeGrid(16, 4.0), es, np.random.default_rng(1)), tmp_path / "u.bin")
    res = runner.invoke(main, ["extend", "--s", "0.5", "--op", "interval_dirichlet", "--in", str(tmp_path / "u.bin"), "--ygrid", "1e-3,1.25,50", "--out", str(tmp_path / "e.bin")])
    assert res.exit_code == 0, res.output
    res = runner.invoke(main, ["trace-check", "--ext", str(tmp_path / "e.bin"), "--report", str(tmp_path / "t.json")])
    assert res.exit_code == 0, res.output
    rep = json.loads((tmp_path / "t.json").read_text())
    assert abs(rep["neumann"]["constant"] - 1.0) < 1e-15
    assert rep["neumann"]["max_deviation"] < 1e-8
    assert rep["quotient"]["max_deviation"] < 1e-8
    assert rep["pde_residual"]["max_scaled_residual"] < 1e-8
    assert rep["stored_rows_relative_mismatch"] < 1e-14


def test_transfer_check(runner):
    res = runner.invoke(main, ["transfer-check", "--pair", "laguerre_to_l", "--s", "0.3", "--trials", "3"])
    assert res.exit_code == 0, res.output
    rep = json.loads(res.output)
    assert rep["max_relative_discrepancy"] < 1e-9
    assert rep["isometry_error"] < 1e-10
    assert runner.invoke(main, ["transfer-check", "--pair", "nope", "--s", "0.3"]).exit_code == 2


def test_master_check(runner):
    res = runner.invoke(main, ["master-check", "--s", "0.5"])
    assert res.exit_code == 0, res.output
    rep = json.loads(res.output)
    assert rep[0]["value"] < 1e-3


def test_specfun_selftest(tmp_path, runner):
    out = tmp_path / "k.csv"
    res = runner.invoke(main, ["specfun-selftest", "--s", "0.5", "--out", str(out)])
    assert res.exit_code == 0, res.output
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert set(rows[0]) == {"s", "y", "re_lam", "im_lam", "check_name", "residual"}
    worst = max(float(r["residual"]) for r in rows if r["check_name"].startswith("representation"))
    assert worst < 1e-8
