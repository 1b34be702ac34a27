"""Batch command-line front end.

Usage: ``curvemoduli --config run.json [--override numeric.grid=128] [--seed 1]``.

Each run writes ``report.txt`` (first line is a timestamp comment, all other
lines are ``key value`` pairs), data files and CSV logs into the configured
output directory.  Exit codes: 0 success, 2 configuration error, 3 numerical
failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field, fields, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import cech, distorted, moduli
from .errors import ConfigError, CurveModuliError, FormatError
from .expr import evaluate, parse_polynomial
from .series import (
    Annulus,
    BiSeries,
    LaurentSeries,
    SmoothnessClass,
    is_pow2,
    laurent_split,
    read_series,
    write_series,
)
from .weierstrass import WeierstrassPolynomial, read_wpoly, weierstrass_prep, write_wpoly

COMMANDS = ("prep", "split", "distort", "cohomology", "chart", "deform")
TOP_KEYS = {"command", "output", "geometry", "inputs", "numeric", "smoothness"}
GEOMETRY_KEYS = {"annulus", "rho", "shear", "covering", "degree", "eps"}
INPUT_KEYS = {"F", "f", "P", "target"}
SMOOTHNESS_KEYS = {"kind", "exponent"}


@dataclass(frozen=True)
class Numeric:
    window: int = 32
    tail: int = 8
    grid: int = 256
    w_grid: int = 64
    w_degree: int = 16
    contour_radius: float | None = None
    tol: float = 1e-10
    max_iter: int = 50
    rank_tol: float = 1e-8
    steps: int = 10
    step: float = 1e-4
    epsilon: float = 1.0


@dataclass(frozen=True)
class RunConfig:
    command: str
    output: Path
    geometry: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    numeric: Numeric = Numeric()
    smoothness: SmoothnessClass = SmoothnessClass()
    base_dir: Path = Path(".")


def _check_keys(section: dict, allowed: set, where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be an object")
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key {where + '.' if where else ''}{key}")


def _resolve(base: Path, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else base / p


def validate_config(data: dict, base_dir: Path = Path(".")) -> RunConfig:
    """Turn a parsed JSON document into a ``RunConfig`` or raise ``ConfigError``."""
    _check_keys(data, TOP_KEYS, "")
    if "command" not in data:
        raise ConfigError("missing key command")
    if data["command"] not in COMMANDS:
        raise ConfigError(f"command must be one of {', '.join(COMMANDS)}")
    if "output" not in data or not isinstance(data["output"], str) or not data["output"]:
        raise ConfigError("missing key output (output directory)")
    geometry = data.get("geometry", {})
    inputs = data.get("inputs", {})
    _check_keys(geometry, GEOMETRY_KEYS, "geometry")
    _check_keys(inputs, INPUT_KEYS, "inputs")
    numeric_raw = data.get("numeric", {})
    _check_keys(numeric_raw, {f.name for f in fields(Numeric)}, "numeric")
    numeric = Numeric()
    for key, value in numeric_raw.items():
        default = getattr(numeric, key)
        if key in ("window", "tail", "grid", "w_grid", "w_degree", "max_iter", "steps"):
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ConfigError(f"numeric.{key} must be a non-negative integer")
        elif value is not None or default is not None:
            if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
                raise ConfigError(f"numeric.{key} must be a positive number")
        numeric = replace(numeric, **{key: value})
    for key in ("grid", "w_grid"):
        if not is_pow2(getattr(numeric, key)):
            raise ConfigError(f"numeric.{key} = {getattr(numeric, key)} is not a power of two: {key}")
    sm_raw = data.get("smoothness", {})
    _check_keys(sm_raw, SMOOTHNESS_KEYS, "smoothness")
    smoothness = SmoothnessClass(sm_raw.get("kind", "sobolev"), float(sm_raw.get("exponent", 1.0)))
    if "annulus" in geometry:
        ann = geometry["annulus"]
        if not (isinstance(ann, list) and len(ann) == 2):
            raise ConfigError("geometry.annulus must be [inner, outer]")
        Annulus(float(ann[0]), float(ann[1]))
    for key, value in inputs.items():
        if isinstance(value, dict):
            _check_keys(value, {"file"}, f"inputs.{key}")
            path = _resolve(base_dir, value.get("file", ""))
            if not path.is_file():
                raise ConfigError(f"inputs.{key}: file {path} does not exist")
        elif isinstance(value, str):
            parse_polynomial(value)
        else:
            raise ConfigError(f"inputs.{key} must be an expression string or {{\"file\": path}}")
    return RunConfig(data["command"], _resolve(base_dir, data["output"]), geometry, inputs, numeric,
                     smoothness, base_dir)


def apply_override(data: dict, item: str) -> None:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    parts = key.split(".")
    node = data
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {key}: {p} is not a section")
    node[parts[-1]] = value


def parse_config(path, overrides=()) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    for item in overrides:
        apply_override(data, item)
    return validate_config(data, path.parent)


# ---------------------------------------------------------------------------
# report helpers

def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, complex) or np.iscomplexobj(x):
        return f"{x.real:.12e} {x.imag:.12e}"
    return f"{float(x):.12e}"


class Report:
    def __init__(self):
        self.lines: list[str] = []

    def add(self, key: str, *values) -> None:
        parts = []
        for v in values:
            if isinstance(v, str):
                parts.append(v)
            elif isinstance(v, (list, tuple, np.ndarray)):
                parts.extend(_num(x) for x in v)
            else:
                parts.append(_num(v))
        self.lines.append(" ".join([key] + parts))

    def write(self, path: Path) -> None:
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        path.write_text(f"# generated {stamp}\n" + "\n".join(self.lines) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_num(x) if not isinstance(x, str) else x for x in row])


# ---------------------------------------------------------------------------
# inputs

def _annulus(cfg: RunConfig, default=(0.5, 2.0)) -> Annulus:
    a = cfg.geometry.get("annulus", default)
    return Annulus(float(a[0]), float(a[1]))


def _bivariate_input(cfg: RunConfig, key: str, domain: Annulus, rho: float) -> BiSeries:
    value = cfg.inputs.get(key)
    if value is None:
        raise ConfigError(f"missing inputs.{key}")
    if isinstance(value, dict):
        obj = read_series(_resolve(cfg.base_dir, value["file"]))
        if isinstance(obj, LaurentSeries):
            obj = BiSeries.from_laurent(obj, rho)
        return obj
    poly = parse_polynomial(value)
    K = cfg.numeric.window
    deg = max([k for _, k in poly] + [0])
    return BiSeries.from_dict(domain, rho, poly, z_window=(-K if not domain.is_disk else 0, K),
                              w_degree=max(deg, 1))


def _laurent_input(cfg: RunConfig, key: str, domain: Annulus) -> LaurentSeries:
    value = cfg.inputs.get(key)
    if value is None:
        raise ConfigError(f"missing inputs.{key}")
    if isinstance(value, dict):
        obj = read_series(_resolve(cfg.base_dir, value["file"]))
        if not isinstance(obj, LaurentSeries):
            raise ConfigError(f"inputs.{key} must be a LAURENT file")
        return obj
    poly = parse_polynomial(value)
    if any(k != 0 for _, k in poly):
        raise ConfigError(f"inputs.{key} must not depend on w")
    K = cfg.numeric.window
    return LaurentSeries.from_dict(domain, {j: v for (j, _), v in poly.items()},
                                   window=(0 if domain.is_disk else -K, K))


def _prepared_input(cfg: RunConfig, key: str, domain: Annulus) -> WeierstrassPolynomial:
    value = cfg.inputs.get(key)
    if isinstance(value, dict):
        path = _resolve(cfg.base_dir, value["file"])
        if path.read_text().lstrip().startswith("WPOLY"):
            return read_wpoly(path)
    F = _bivariate_input(cfg, key, domain, 1.0)
    P, _ = weierstrass_prep(F, cfg.numeric.contour_radius)
    return P


# ---------------------------------------------------------------------------
# commands

def cmd_prep(cfg: RunConfig, rep: Report) -> None:
    domain = _annulus(cfg)
    rho = float(cfg.geometry.get("rho", 1.0))
    F = _bivariate_input(cfg, "F", domain, rho)
    P, pr = weierstrass_prep(F, cfg.numeric.contour_radius)
    write_wpoly(cfg.output / "prepared.wpoly", P)
    rep.add("degree", pr.degree)
    rep.add("contour_radius", pr.contour_radius)
    rep.add("containment_radius", pr.containment_radius)
    rep.add("h_min", pr.h_min)
    rep.add("h_max", pr.h_max)
    rep.add("truncation_loss", pr.truncation_loss)


def cmd_split(cfg: RunConfig, rep: Report) -> None:
    f = _laurent_input(cfg, "f", _annulus(cfg))
    plus, minus = laurent_split(f)
    write_series(cfg.output / "plus.laurent", plus)
    write_series(cfg.output / "minus.laurent", minus)
    rep.add("plus_max_abs", plus.max_abs_coefficient())
    rep.add("minus_max_abs", minus.max_abs_coefficient())
    rep.add("resum_error", (plus + minus).distance(f))


def _cylinder(cfg: RunConfig) -> distorted.DistortedCylinder:
    dom = _annulus(cfg)
    rho = float(cfg.geometry.get("rho", 0.9))
    eps = float(cfg.geometry.get("shear", 0.0))
    K = cfg.numeric.window
    if eps == 0:
        return distorted.DistortedCylinder.identity(dom.inner_radius, dom.outer_radius, rho,
                                                    window=(-K, K), w_degree=cfg.numeric.w_degree)
    return distorted.DistortedCylinder.shear(dom.inner_radius, dom.outer_radius, rho, eps,
                                             window=(-K, K), w_degree=cfg.numeric.w_degree)


def cmd_distort(cfg: RunConfig, rep: Report) -> None:
    cyl = _cylinder(cfg)
    P = _prepared_input(cfg, "P", _annulus(cfg))
    history = []
    try:
        D = distorted.solve_dwp(P, cyl, tol=cfg.numeric.tol, max_iter=cfg.numeric.max_iter,
                                epsilon=cfg.numeric.epsilon)
        history = list(D.history)
    except CurveModuliError as exc:
        history = list(getattr(exc, "history", []))
        raise
    finally:
        _write_csv(cfg.output / "convergence.csv", ["iteration", "q_norm", "r_norm"],
                   [(k + 1, q, r) for k, (r, q) in enumerate(history)])
    distorted.write_dwp(cfg.output / "distorted.dwp", D)
    rep.add("degree", D.degree)
    rep.add("iterations", D.iterations)
    rep.add("final_q_norm", history[-1][1] if history else 0.0)
    for i in range(1, D.degree + 1):
        rep.add(f"minus_{i}_max_abs", D.minus_parts[i - 1].max_abs_coefficient())
        rep.add(f"plus_{i}_max_abs", D.plus_parts[i - 1].max_abs_coefficient())


def cmd_cohomology(cfg: RunConfig, rep: Report) -> None:
    kind = cfg.geometry.get("covering", "projective_line")
    K = cfg.numeric.window
    if kind == "projective_line":
        if "degree" not in cfg.geometry:
            raise ConfigError("geometry.degree is required for the projective_line covering")
        cov = cech.projective_line_covering(int(cfg.geometry["degree"]), K, cfg.smoothness)
    elif kind == "annulus":
        cov = cech.annulus_covering(K, smoothness=cfg.smoothness)
    else:
        raise ConfigError(f"geometry.covering must be projective_line or annulus, not {kind!r}")
    op = cech.assemble_coboundary(cov, K)
    ca = cech.cokernel_analysis(op, cfg.numeric.rank_tol)
    rep.add("source_dim", op.shape[1])
    rep.add("target_dim", op.shape[0])
    rep.add("h0_dim", len(cech.h0_kernel(op, cfg.numeric.rank_tol)))
    rep.add("h1_dim", ca.dim)
    rep.add("artifacts", ca.artifacts)
    rep.add("rank_threshold", ca.threshold)
    rep.add("spectral_gap", ca.gap if np.isfinite(ca.gap) else "inf")
    rep.add("singular_values", ca.singular_values)


def _chart_config(cfg: RunConfig) -> tuple[moduli.ChartConfig, float, object]:
    eps = float(cfg.geometry.get("eps", 0.05))
    expr = cfg.inputs.get("F", "w^2 - z/4")
    if isinstance(expr, dict):
        raise ConfigError("inputs.F for chart/deform must be an expression")
    poly = parse_polynomial(expr)
    func = lambda z, w: evaluate(poly, z, w)  # noqa: E731
    mc = moduli.two_chart_configuration(func, eps, cfg.numeric.window, cfg.numeric.tail, cfg.smoothness,
                                        w_degree=cfg.numeric.w_degree, grid=cfg.numeric.grid,
                                        w_grid=cfg.numeric.w_grid)
    return mc, eps, func


def _chart_report(chart: moduli.ModuliChart, rep: Report) -> None:
    rep.add("dimension", chart.config.dimension)
    rep.add("tangent_dim", chart.tangent_dim)
    rep.add("h1_dim", chart.h1_dim)
    rep.add("artifacts", chart.artifacts)
    rep.add("base_consistency", chart.base_residual)
    rep.add("singular_values", chart.operator.svd()[1])


def cmd_chart(cfg: RunConfig, rep: Report, seed: int) -> None:
    mc, _, _ = _chart_config(cfg)
    chart = moduli.build_chart(mc, cfg.numeric.rank_tol, max_iter=cfg.numeric.max_iter)
    _chart_report(chart, rep)
    rng = np.random.default_rng(seed)
    op = chart.operator
    dirs = rng.normal(size=(op.shape[1], 2)) + 1j * rng.normal(size=(op.shape[1], 2))
    dirs /= op.source_weights[:, None]
    dirs /= np.linalg.norm(op.source_weights[:, None] * dirs, axis=0)
    dc = moduli.differential_check(mc, op, cfg.numeric.step, directions=dirs)
    rep.add("differential_error", dc.max_error)
    t = rng.normal(size=chart.tangent_dim) + 1j * rng.normal(size=chart.tangent_dim)
    t *= 1e-2 / np.linalg.norm(t)
    res = chart.solve(t)
    rep.add("newton_iterations", res.iterations)
    rep.add("newton_history", res.history)
    _write_csv(cfg.output / "newton.csv", ["iteration", "residual"],
               [(k + 1, r) for k, r in enumerate(res.history)])


def cmd_deform(cfg: RunConfig, rep: Report) -> None:
    mc, eps, func = _chart_config(cfg)
    target_expr = cfg.inputs.get("target")
    if target_expr is None or isinstance(target_expr, dict):
        raise ConfigError("inputs.target must be an expression")
    tpoly = parse_polynomial(target_expr)
    target = moduli.global_section_target(mc, lambda z, w: evaluate(tpoly, z, w), eps,
                                          cfg.numeric.grid, cfg.numeric.w_grid)
    chart = moduli.build_chart(mc, cfg.numeric.rank_tol, max_iter=cfg.numeric.max_iter)
    _chart_report(chart, rep)
    fam = moduli.continue_family(chart, target, cfg.numeric.steps, tol=max(cfg.numeric.tol, 1e-12))
    write_family(cfg.output / "family", fam, mc)
    rep.add("steps", fam.steps)
    rep.add("max_residual", max(fam.residuals))
    rep.add("residuals", fam.residuals)
    _write_csv(cfg.output / "newton.csv", ["step", "lambda", "iteration", "residual"],
               [(s, lam, k + 1, r) for s, (lam, h) in enumerate(zip(fam.lambdas, fam.histories))
                for k, r in enumerate(h)])


def write_family(directory: Path, fam: moduli.Family, mc: moduli.ChartConfig) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    lines = [f"FAMILY {fam.steps} {fam.tol:.12e}"]
    for s, (lam, f, res) in enumerate(zip(fam.lambdas, fam.points, fam.residuals)):
        names = []
        for i, P in enumerate(mc.polynomials(f)):
            name = f"step{s:03d}_chart{i}.wpoly"
            write_wpoly(directory / name, P)
            names.append(name)
        lines.append(" ".join([str(s), f"{lam:.12e}", f"{res:.12e}"] + names))
    (directory / "index.txt").write_text("\n".join(lines) + "\n")


def run(cfg: RunConfig, seed: int = 0) -> int:
    """Execute one configured command; returns the process exit code."""
    try:
        cfg.output.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return 4
    rep = Report()
    rep.add("command", cfg.command)
    try:
        if cfg.command == "prep":
            cmd_prep(cfg, rep)
        elif cfg.command == "split":
            cmd_split(cfg, rep)
        elif cfg.command == "distort":
            cmd_distort(cfg, rep)
        elif cfg.command == "cohomology":
            cmd_cohomology(cfg, rep)
        elif cfg.command == "chart":
            cmd_chart(cfg, rep, seed)
        elif cfg.command == "deform":
            cmd_deform(cfg, rep)
        rep.add("status", "ok")
        rep.write(cfg.output / "report.txt")
        return 0
    except (OSError, FormatError) as exc:
        code = 4
        err = exc
    except CurveModuliError as exc:
        code = exc.exit_code
        err = exc
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        code = 3
        err = exc
    rep.add("status", "error")
    rep.add("error_type", type(err).__name__)
    rep.add("error_message", str(err).replace("\n", " "))
    try:
        rep.write(cfg.output / "report.txt")
    except OSError:
        pass
    print(f"error: {err}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="curvemoduli", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="path to the JSON run configuration")
    ap.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config entry, e.g. numeric.grid=128 (repeatable)")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized directions")
    args = ap.parse_args(argv)
    try:
        cfg = parse_config(args.config, args.override)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg, args.seed)


if __name__ == "__main__":
    sys.exit(main())
