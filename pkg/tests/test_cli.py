import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from curvemoduli.cli import apply_override, main, parse_config, validate_config
from curvemoduli.distorted import format_dwp, read_dwp
from curvemoduli.errors import ConfigError
from curvemoduli.expr import evaluate, parse_polynomial
from curvemoduli.series import format_laurent, read_series
from curvemoduli.weierstrass import format_wpoly, read_wpoly

SMALL = {"window": 8, "tail": 4, "grid": 128, "w_grid": 64, "w_degree": 12}


def write_config(tmp_path: Path, name="run.json", **data) -> Path:
    data.setdefault("output", "out")
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def run_cli(cfg: Path, *extra) -> int:
    return main(["--config", str(cfg), *extra])


def report(path: Path) -> dict:
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# generated ")
    return {ln.split(" ", 1)[0]: ln.split(" ", 1)[1] for ln in lines[1:]}


def numeric_body(path: Path) -> str:
    return "\n".join(path.read_text().splitlines()[1:])


# --- expressions -----------------------------------------------------------------

def test_expression_parser():
    poly = parse_polynomial("w^2 - z/4 + (1-2i)/z + 0.5i*w*z^-2")
    assert poly == {(0, 2): 1, (1, 0): -0.25, (-1, 0): 1 - 2j, (-2, 1): 0.5j}
    z, w = 1.3 - 0.2j, 0.1 + 0.4j
    assert evaluate(poly, z, w) == pytest.approx(w**2 - z / 4 + (1 - 2j) / z + 0.5j * w / z**2)
    for bad in ("w/(w+1)", "exp(z)", "z^w", "import os", "w^-1"):
        with pytest.raises(ConfigError):
            parse_polynomial(bad)


# --- configuration ---------------------------------------------------------------

def test_minimal_prep_config(tmp_path):
    cfg = parse_config(write_config(tmp_path, command="prep", inputs={"F": "w^2 - z/4"}))
    assert cfg.command == "prep" and cfg.output == tmp_path / "out"


def test_unknown_key_is_named(tmp_path):
    with pytest.raises(ConfigError, match="numeric.gird"):
        parse_config(write_config(tmp_path, command="prep", numeric={"gird": 128}))
    with pytest.raises(ConfigError, match="colour"):
        parse_config(write_config(tmp_path, command="prep", colour=1))


def test_grid_must_be_power_of_two(tmp_path, capsys):
    p = write_config(tmp_path, command="prep", inputs={"F": "w^2 - z/4"}, numeric={"grid": 100})
    with pytest.raises(ConfigError, match="grid"):
        parse_config(p)
    assert run_cli(p) == 2
    assert "grid" in capsys.readouterr().err


def test_missing_output_rejected():
    with pytest.raises(ConfigError, match="output"):
        validate_config({"command": "prep", "inputs": {"F": "w"}})


def test_missing_input_file_rejected(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        parse_config(write_config(tmp_path, command="split", inputs={"f": {"file": "nope.laurent"}}))


def test_override(tmp_path):
    p = write_config(tmp_path, command="prep", inputs={"F": "w^2 - z/4"})
    cfg = parse_config(p, ["numeric.grid=64", "geometry.annulus=[0.4, 2.5]"])
    assert cfg.numeric.grid == 64 and cfg.geometry["annulus"] == [0.4, 2.5]
    data = {}
    apply_override(data, "inputs.F=w^3")
    assert data == {"inputs": {"F": "w^3"}}
    with pytest.raises(ConfigError):
        apply_override(data, "novalue")


def test_malformed_json_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n "command": "prep",\n oops\n}')
    with pytest.raises(ConfigError, match="line 3"):
        parse_config(p)


# --- commands --------------------------------------------------------------------

def test_prep_reproduces_monic_input(tmp_path):
    p = write_config(tmp_path, command="prep", inputs={"F": "w^2 - z/4"}, numeric={"window": 16})
    assert run_cli(p) == 0
    P = read_wpoly(tmp_path / "out" / "prepared.wpoly")
    assert P.coefficients[0].max_abs_coefficient() < 1e-13
    assert P.coefficients[1].as_dict(1e-13) == pytest.approx({1: -0.25})
    rep = report(tmp_path / "out" / "report.txt")
    assert rep["degree"] == "2" and rep["status"] == "ok"


def test_cohomology_obstructed_twist(tmp_path):
    p = write_config(tmp_path, command="cohomology", geometry={"covering": "projective_line", "degree": -2},
                     numeric={"window": 12})
    assert run_cli(p) == 0
    rep = report(tmp_path / "out" / "report.txt")
    assert rep["h1_dim"] == "1" and rep["h0_dim"] == "0"


def test_split_and_distort(tmp_path):
    p = write_config(tmp_path, "split.json", command="split", output="s", inputs={"f": "z + 2/z - 3i"})
    assert run_cli(p) == 0
    plus = read_series(tmp_path / "s" / "plus.laurent")
    assert plus.as_dict(0) == {0: -3j, 1: 1}
    p = write_config(tmp_path, "dist.json", command="distort", output="d",
                     geometry={"annulus": [0.5, 2.0], "rho": 0.9, "shear": 0.05},
                     inputs={"P": "w^2 - z/4 + 0.02*z^2"}, numeric={"window": 24})
    assert run_cli(p) == 0
    rows = (tmp_path / "d" / "convergence.csv").read_text().splitlines()
    assert rows[0] == "iteration,q_norm,r_norm" and len(rows) >= 2
    assert read_dwp(tmp_path / "d" / "distorted.dwp").degree == 2


def test_chart_command(tmp_path):
    p = write_config(tmp_path, command="chart", geometry={"eps": 0.05}, numeric=SMALL)
    assert run_cli(p, "--seed", "3") == 0
    rep = report(tmp_path / "out" / "report.txt")
    assert rep["h1_dim"] == "0"
    assert float(rep["differential_error"]) < 1e-5
    assert (tmp_path / "out" / "newton.csv").is_file()


def test_deform_to_base_gives_constant_family(tmp_path):
    p = write_config(tmp_path, command="deform", geometry={"eps": 0.05},
                     inputs={"F": "w^2 - z/4", "target": "w^2 - z/4"}, numeric={**SMALL, "steps": 3})
    assert run_cli(p) == 0
    fam = tmp_path / "out" / "family"
    index = (fam / "index.txt").read_text().splitlines()
    assert index[0].split()[:2] == ["FAMILY", "3"]
    for chart in (0, 1):
        texts = {(fam / f"step{s:03d}_chart{chart}.wpoly").read_text() for s in range(4)}
        assert len(texts) == 1


# --- exit codes ------------------------------------------------------------------

def test_numeric_failure_exit_code(tmp_path):
    # the root w = 0.9 lies on the default contour
    p = write_config(tmp_path, command="prep", inputs={"F": "w - 0.9"})
    assert run_cli(p) == 3
    rep = report(tmp_path / "out" / "report.txt")
    assert rep["status"] == "error" and "guard band" in rep["error_message"]


def test_malformed_series_file_exit_code(tmp_path):
    (tmp_path / "bad.laurent").write_text("LAURENT 0 x 0.5 2\n")
    p = write_config(tmp_path, command="split", inputs={"f": {"file": "bad.laurent"}})
    assert run_cli(p) == 4


def test_missing_degree_is_config_error(tmp_path):
    p = write_config(tmp_path, command="cohomology", geometry={"covering": "projective_line"})
    assert run_cli(p) == 2


# --- determinism and round trips ---------------------------------------------------

CONFIGS = {
    "prep": {"command": "prep", "inputs": {"F": "(w^2 - z/4)*(1 + 0.3*w)"}},
    "split": {"command": "split", "inputs": {"f": "z^3 - 0.5/z^2 + 1"}},
    "distort": {"command": "distort", "geometry": {"rho": 0.9, "shear": 0.05},
                "inputs": {"P": "w^2 - z/4 + 0.01*z^3"}, "numeric": {"window": 24}},
    "cohomology": {"command": "cohomology", "geometry": {"covering": "annulus"}, "numeric": {"window": 6}},
    "deform": {"command": "deform", "geometry": {"eps": 0.05},
               "inputs": {"F": "w^2 - z/4", "target": "w^2 - z/4 - 0.02"}, "numeric": {**SMALL, "steps": 2}},
}

PARSERS = {".wpoly": (read_wpoly, format_wpoly), ".dwp": (read_dwp, format_dwp),
           ".laurent": (read_series, format_laurent)}


@pytest.mark.parametrize("name", sorted(CONFIGS))
def test_determinism_and_round_trip(tmp_path, name):
    outs = []
    for k in range(2):
        p = write_config(tmp_path, f"{name}{k}.json", output=f"out{k}", **CONFIGS[name])
        assert run_cli(p) == 0
        outs.append(tmp_path / f"out{k}")
    assert numeric_body(outs[0] / "report.txt") == numeric_body(outs[1] / "report.txt")
    files = [f for f in outs[0].rglob("*") if f.suffix in PARSERS]
    for f in files:
        reader, writer = PARSERS[f.suffix]
        assert writer(reader(f)) == f.read_text()
        assert f.read_bytes() == (outs[1] / f.relative_to(outs[0])).read_bytes()
    for f in outs[0].rglob("*.csv"):
        assert f.read_bytes() == (outs[1] / f.relative_to(outs[0])).read_bytes()


def test_console_entry_point(tmp_path):
    p = write_config(tmp_path, command="cohomology", geometry={"covering": "projective_line", "degree": 1},
                     numeric={"window": 6})
    proc = subprocess.run([sys.executable, "-m", "curvemoduli.cli", "--config", str(p)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert report(tmp_path / "out" / "report.txt")["h0_dim"] == "2"
    assert np.isfinite(float(report(tmp_path / "out" / "report.txt")["rank_threshold"]))
