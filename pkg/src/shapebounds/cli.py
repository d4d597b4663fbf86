"""Command-line front end.

Subcommands::

    shapebounds bounds   --input data.csv --gamma 9 --family symmetric
    shapebounds cdf      --input data.csv --gamma 9 --output cdf.csv
    shapebounds simulate --gamma 3 --family symmetric --seed 1 --reps 200

Exit codes: 0 success, 2 input/configuration error, 3 empty plausibility
set, 4 solver failure. Errors print one ``shapebounds: <kind>: <message>``
line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from . import lp
from .bounds import compute_bounds, endpoint_problems
from .core import (
    ConstraintSpec,
    EmptyPlausibilitySetError,
    InvalidInputError,
    Sample,
    SolverError,
    ecdf,
    weighted_ecdf,
)
from .dist import delta_gamma_n, sigma_gamma_sq, zeta_gamma_alpha
from .envelope import ks_offset
from .serialize import csv_text, dumps
from .sim import Population, Scenario, coverage_experiment

SCHEMA_VERSION = 1
FAMILY_NAMES = {"none": "none", "normal": "parametric-gaussian", "symmetric": "symmetric", "logconcave": "log-concave"}
CDF_SERIES = ("none", "symmetric", "logconcave")

EXIT_OK, EXIT_INPUT, EXIT_EMPTY, EXIT_SOLVER = 0, 2, 3, 4


class InputError(InvalidInputError):
    pass


@dataclass
class RunConfig:
    input: Optional[str] = None
    column: str = "0"
    header: str = "auto"
    gamma: float = 2.0
    family: str = "none"
    alpha: Optional[float] = None
    delta_star: float = 0.0
    m_grid: Optional[int] = None
    theta_grid: Optional[str] = None
    output: Optional[str] = None
    emit_weights: bool = False
    emit_cdf: Optional[str] = None
    emit_lp: Optional[str] = None
    seed: Optional[int] = None
    reps: int = 100
    n: int = 100
    population: str = "normal"
    pop_params: str = "0,1"
    gamma_true: Optional[float] = None
    summary: Optional[str] = None

    def __post_init__(self):
        if self.family not in FAMILY_NAMES:
            raise InputError(f"family must be one of {sorted(FAMILY_NAMES)}, got {self.family!r}")
        if self.header not in ("auto", "yes", "no"):
            raise InputError("header must be auto, yes or no")
        self.spec()  # validates gamma, alpha, delta_star, grids

    def theta_shape(self):
        if self.theta_grid is None:
            return None
        try:
            a, b = (int(x) for x in str(self.theta_grid).lower().split("x"))
        except ValueError:
            raise InputError(f"theta grid must look like NxM, got {self.theta_grid!r}") from None
        return a, b

    def spec(self) -> ConstraintSpec:
        return ConstraintSpec(
            gamma=self.gamma,
            family=FAMILY_NAMES[self.family],
            alpha=self.alpha,
            delta_star=self.delta_star,
            theta_grid=self.theta_shape(),
            m_grid=self.m_grid,
        )

    def echo(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_CASTS = {"gamma": float, "alpha": float, "delta_star": float, "gamma_true": float,
          "m_grid": int, "seed": int, "reps": int, "n": int}
_BOOLS = {"emit_weights"}


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    known = {f.name for f in fields(RunConfig)}
    out = {}
    try:
        text = open(path, encoding="utf-8").read()
    except OSError as exc:
        raise InputError(f"config {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"config {path}: line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise InputError(f"config {path}: line {lineno}: unknown key {key!r}")
        out[key] = _cast(key, value)
    return out


def _cast(key, value):
    try:
        if key in _BOOLS:
            return str(value).lower() in ("1", "true", "yes", "on")
        return _CASTS[key](value) if key in _CASTS else value
    except ValueError:
        raise InputError(f"{key}: cannot parse {value!r}") from None


def read_column(path: str, column: str = "0", header: str = "auto") -> np.ndarray:
    """Read one numeric column from a UTF-8 CSV; blank lines are ignored."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [(i, r) for i, r in enumerate(csv.reader(fh), 1) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise InputError(f"{path}: not valid UTF-8") from None
    if not rows:
        raise InputError(f"{path}: no data")
    first = rows[0][1]
    has_header = header == "yes"
    if header == "auto":
        has_header = not column.lstrip("-").isdigit() or not _is_number(_cell(first, column, rows[0][0], path, False))
    if has_header:
        names = [c.strip() for c in first]
        if column.lstrip("-").isdigit():
            idx = int(column)
        elif column in names:
            idx = names.index(column)
        else:
            raise InputError(f"{path}: no column named {column!r}")
        rows = rows[1:]
    else:
        if not column.lstrip("-").isdigit():
            raise InputError(f"{path}: column {column!r} needs a header row")
        idx = int(column)
    values = []
    for lineno, row in rows:
        cell = _cell(row, str(idx), lineno, path)
        try:
            values.append(float(cell))
        except ValueError:
            raise InputError(f"{path}: line {lineno}: cannot parse {cell!r} as a number") from None
    if not values:
        raise InputError(f"{path}: no data rows")
    arr = np.array(values)
    if not np.all(np.isfinite(arr)):
        bad = rows[int(np.flatnonzero(~np.isfinite(arr))[0])][0]
        raise InputError(f"{path}: line {bad}: non-finite value")
    return arr


def _cell(row, column, lineno, path, strict=True):
    idx = int(column)
    if not -len(row) <= idx < len(row):
        if not strict:
            return ""
        raise InputError(f"{path}: line {lineno}: no column {idx}")
    return row[idx].strip()


def _is_number(text) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


# ---------------------------------------------------------------------------
# commands


def _constants(spec: ConstraintSpec, n: int) -> dict:
    alpha = spec.resolved_alpha(n)
    out = {
        "delta": delta_gamma_n(spec.gamma, n),
        "zeta": zeta_gamma_alpha(spec.gamma, alpha),
        "sigmaSq": sigma_gamma_sq(spec.gamma).sigma_sq,
    }
    if spec.family == "log-concave":
        out["ksOffset"] = ks_offset(n)
    return out


def _grid_value(point):
    if point is None:
        return None
    if isinstance(point, tuple):
        return {"location": point[0], "scale": point[1]}
    return point


def bounds_result(cfg: RunConfig, sample: Sample):
    spec = cfg.spec()
    iv = compute_bounds(sample, spec)
    warnings = []
    for d in iv.diagnostics:
        if d["status"] == "infeasible":
            warnings.append(f"grid point {d['gridPoint']} infeasible for {d['sense']} endpoint")
    result = {
        "schemaVersion": SCHEMA_VERSION,
        "method": spec.family,
        "gamma": spec.gamma,
        "n": sample.n,
        "alpha": spec.resolved_alpha(sample.n),
        "deltaStar": spec.delta_star,
        "interval": {"lower": iv.lower, "upper": iv.upper},
        "gridArgmax": {
            "lower": _grid_value(iv.lower_solution.grid_point if spec.family != "none" else None),
            "upper": _grid_value(iv.upper_solution.grid_point if spec.family != "none" else None),
        },
        "constants": _constants(spec, sample.n),
        "warnings": warnings,
        "notes": iv.notes,
        "config": cfg.echo(),
    }
    if cfg.emit_weights:
        result["weights"] = {"lower": iv.lower_solution.weights, "upper": iv.upper_solution.weights}
    return result, iv


def cdf_rows(sample: Sample, series: dict) -> list:
    """Long-format (y, level, series) rows at the distinct sorted values."""
    f = ecdf(sample)
    rows = [[float(y), float(v), "ecdf"] for y, v in zip(f.breakpoints, f.levels)]
    for name, weights in series.items():
        g = weighted_ecdf(sample, weights)
        rows += [[float(y), float(v), name] for y, v in zip(g.breakpoints, g.levels)]
    return rows


def _write(path: Optional[str], text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def _load(cfg: RunConfig) -> Sample:
    if not cfg.input:
        raise InputError("--input is required")
    values = read_column(cfg.input, cfg.column, cfg.header)
    if values.size < 2:
        raise InputError(f"{cfg.input}: need at least two observations")
    return Sample.from_values(values)


def cmd_bounds(cfg: RunConfig) -> int:
    sample = _load(cfg)
    result, iv = bounds_result(cfg, sample)
    if cfg.emit_cdf:
        name = {v: k for k, v in FAMILY_NAMES.items()}[iv.spec.family]
        _write(cfg.emit_cdf, csv_text(["y", "level", "series"], cdf_rows(sample, {name: iv.upper_solution.weights})))
    if cfg.emit_lp:
        probs = endpoint_problems(sample, iv)
        _write(cfg.emit_lp, "".join(f"# {k}\n{lp.dump_lp(p)}" for k, p in probs.items()))
    for w in result["warnings"]:
        print(f"shapebounds: warning: {w}", file=sys.stderr)
    _write(cfg.output, dumps(result) + "\n")
    return EXIT_OK


def cmd_cdf(cfg: RunConfig) -> int:
    sample = _load(cfg)
    base = cfg.spec()
    series = {}
    for name in CDF_SERIES:
        spec = ConstraintSpec(base.gamma, FAMILY_NAMES[name], base.alpha, base.delta_star, m_grid=base.m_grid)
        series[name] = compute_bounds(sample, spec).upper_solution.weights
    _write(cfg.output, csv_text(["y", "level", "series"], cdf_rows(sample, series)))
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    if cfg.seed is None:
        raise InputError("--seed is required for simulate")
    if cfg.reps < 1:
        raise InputError("--reps must be >= 1")
    try:
        params = tuple(float(x) for x in cfg.pop_params.split(","))
    except ValueError:
        raise InputError(f"--pop-params must be two comma-separated numbers, got {cfg.pop_params!r}") from None
    if len(params) != 2:
        raise InputError("--pop-params needs exactly two numbers")
    gamma_true = cfg.gamma if cfg.gamma_true is None else cfg.gamma_true
    scenario = Scenario.standard(Population(cfg.population, params), gamma_true, cfg.n, cfg.seed)
    report = coverage_experiment(scenario, cfg.spec(), cfg.reps)
    summary = dict(report.summary, config=cfg.echo())
    _write(cfg.output, csv_text(list(report.COLUMNS), report.rows))
    if cfg.summary:
        _write(cfg.summary, dumps(summary) + "\n")
    elif cfg.output not in (None, "-"):
        sys.stdout.write(dumps(summary) + "\n")
    return EXIT_OK


COMMANDS = {"bounds": cmd_bounds, "cdf": cmd_cdf, "simulate": cmd_simulate}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shapebounds", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value file; flags override it")
        sp.add_argument("--input")
        sp.add_argument("--column", help="0-based index or header name")
        sp.add_argument("--header", choices=["auto", "yes", "no"])
        sp.add_argument("--gamma", type=float)
        sp.add_argument("--family", choices=sorted(FAMILY_NAMES))
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--delta-star", type=float)
        sp.add_argument("--m-grid", type=int)
        sp.add_argument("--theta-grid", help="NxM locations x scales")
        sp.add_argument("--output")
        sp.add_argument("--emit-weights", action="store_true", default=None)
        sp.add_argument("--emit-cdf")
        sp.add_argument("--emit-lp")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--reps", type=int)
        sp.add_argument("--n", type=int)
        sp.add_argument("--population", choices=["normal", "logistic", "gamma", "uniform"])
        sp.add_argument("--pop-params")
        sp.add_argument("--gamma-true", type=float)
        sp.add_argument("--summary")
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return RunConfig(**values)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="shapebounds: warning: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except EmptyPlausibilitySetError as exc:
        print(f"shapebounds: empty-plausibility-set: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except SolverError as exc:
        print(f"shapebounds: solver-failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (InvalidInputError, OSError) as exc:
        print(f"shapebounds: input-error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
