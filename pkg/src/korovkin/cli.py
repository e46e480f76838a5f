"""Command-line harness: bound verification, rate experiments, preconditioner spectra.

Exit codes: 0 when every verdict passes, 1 on a bound violation (or a
spectrum mismatch for ``precond``), 2 on usage, parse or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Sequence

import numpy as np

from . import operators as ops
from .bounds import operator_bound
from .expr import Expression, ExpressionError, evaluate_on, parse_expression
from .grid import CIRCLE, UNIT, GridFunction, fit_rate
from .toeplitz import (
    NODE_VARIANT,
    WEIGHT_VARIANT,
    UnitaryFrame,
    fourier_coefficients,
    frobenius_optimality_check,
    periodic_parameters,
    preconditioner,
    quadratic_form,
    toeplitz_build,
    weighted_family,
)

CSV_COLUMNS = ["example", "n", "mu", "m_const", "bound", "observed", "margin", "verdict", "f"]
RATE_COLUMNS = ["example", "quantity", "f", "exponent", "intercept", "r_squared"]
PRECOND_COLUMNS = ["k", "x", "eigenvalue", "quadratic_form", "symbol"]

ALGEBRAIC_PROBES = ["x^2", "abs(x-0.5)", "exp(x)", "1/(1+25*(2*x-1)^2)"]
TRIGONOMETRIC_PROBES = ["cos(x)", "abs(sin(x))", "exp(cos(x))"]

# example id -> (mode, default parameter expressions)
EXAMPLES = {
    "bernstein": (ops.ALGEBRAIC, {"a": "x"}),
    "kantorovich1": (ops.ALGEBRAIC, {"a": "x", "cn": "1", "dn": "n"}),
    "kantorovich2": (ops.ALGEBRAIC, {"a": "x"}),
    "exp-kantorovich": (ops.ALGEBRAIC, {"a": "x"}),
    "exp-bernstein": (ops.ALGEBRAIC, {"a": "1"}),
    "two-weight": (ops.ALGEBRAIC, {"a": "1", "b": "1"}),
    "lp-H": (ops.ALGEBRAIC, {"y": "2^(-x)"}),
    "lp-G": (ops.ALGEBRAIC, {"y": "1"}),
    "circulant-w": (ops.TRIGONOMETRIC, {"a": "0"}),
    "circulant-node": (ops.TRIGONOMETRIC, {"a": "(1+cos(x))/2"}),
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    example: str
    n: list[int] = field(default_factory=lambda: [8, 16, 32, 64, 128])
    f: list[str] | None = None
    a: str | None = None
    an_template: str | None = None
    b: str | None = None
    cn: str | None = None
    dn: str | None = None
    y: str | None = None
    d: int | None = None
    grid: int | None = None
    t_points: int = 129
    mode: str | None = None
    format: str = "csv"
    seed: int = 0

    def validate(self) -> ExperimentConfig:
        if self.example not in EXAMPLES:
            raise ConfigError(f"unknown example {self.example!r}; choose from {', '.join(EXAMPLES)}")
        mode, defaults = EXAMPLES[self.example]
        if self.mode is not None and self.mode != mode:
            raise ConfigError(f"example {self.example!r} runs in {mode} mode")
        if not self.n or any(int(k) < 2 for k in self.n):
            raise ConfigError("n-list must be nonempty with every n >= 2")
        if any(b <= a for a, b in zip(self.n, self.n[1:])):
            raise ConfigError("n-list must be strictly increasing")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.grid is not None and self.grid < 4:
            raise ConfigError("grid must have at least 4 samples")
        if self.t_points < 2:
            raise ConfigError("t_points must be >= 2")
        for key in defaults:
            if getattr(self, key) is None:
                setattr(self, key, defaults[key])
        for key in defaults:
            if getattr(self, key) in (None, ""):
                raise ConfigError(f"example {self.example!r} needs parameter {key!r}")
        self.mode = mode
        return self


def _compile(text: str, variables=("x",), what: str = "expression") -> Expression:
    try:
        return parse_expression(text, variables)
    except ExpressionError as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def _checked(e: Expression, what: str, x, **env) -> np.ndarray:
    try:
        return evaluate_on(e, x, **env)
    except ExpressionError as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def _sampler(text: str, what: str):
    e = _compile(text, ("x",), what)
    return lambda x: _checked(e, what, x)


def _template(text: str, what: str):
    e = _compile(text, ("x", "n"), what)
    return lambda n, x: _checked(e, what, x, n=float(n))


def _of_n(text: str, what: str):
    e = _compile(text, ("n",), what)
    return lambda n: float(_checked(e, what, np.zeros(1), n=float(n))[0])


def _limit_ratio(func, scale: float) -> float:
    big = 2.0**40
    return round(func(big) / (scale * big), 9)


def build_family(config: ExperimentConfig):
    """Operator family and source domain for a validated config."""
    ex = config.example
    if config.mode == ops.TRIGONOMETRIC:
        size = config.grid or CIRCLE.default_size()
        an = _template(config.an_template, "a_n template") if config.an_template else None
        params = periodic_parameters(_sampler(config.a, "a"), an, size)
        variant = WEIGHT_VARIANT if ex == "circulant-w" else NODE_VARIANT
        return weighted_family(variant, params), CIRCLE, size

    size = config.grid or UNIT.default_size()
    if ex in ("lp-H", "lp-G"):
        mode = ops.H_MODE if ex == "lp-H" else ops.G_MODE
        top = max(config.n)
        d = config.d or (top if mode == ops.H_MODE else top + 8)
        y = _sampler(config.y, "y")(np.arange(1, d + 1))
        params = ops.lp_parameter_functions(mode, y, d)
        return ops.BernsteinFamily(params), UNIT, size

    points = UNIT.points(config.t_points)
    if ex == "two-weight":
        a = _sampler(config.a, "a")(points)
        b = _sampler(config.b, "b")(points)
        return ops.TwoWeightBernsteinFamily(points, a, b), UNIT, size

    an = _template(config.an_template, "a_n template") if config.an_template else None
    params = ops.interval_parameters(_sampler(config.a, "a"), an, points)
    if ex == "bernstein":
        return ops.BernsteinFamily(params), UNIT, size
    if ex == "exp-bernstein":
        return ops.ExpBernsteinFamily(params), UNIT, size
    if ex == "kantorovich1":
        c, d = _of_n(config.cn, "c_n"), _of_n(config.dn, "d_n")
        law = ops.ScaledUniformLaw(c, d, alpha=_limit_ratio(d, 1.0), beta=_limit_ratio(c, 2.0))
        return ops.KantorovichFamily(params, law), UNIT, size
    if ex == "kantorovich2":
        return ops.KantorovichFamily(params, ops.IrwinHallLaw()), UNIT, size
    return ops.ExpKantorovichFamily(params, ops.IrwinHallLaw()), UNIT, size


def probe_suite(config: ExperimentConfig, domain, size) -> list[tuple[str, GridFunction]]:
    texts = config.f or (TRIGONOMETRIC_PROBES if domain.periodic else ALGEBRAIC_PROBES)
    out = []
    for text in texts:
        g = _sampler(text, f"probe {text!r}")
        out.append((text, GridFunction.sample(g, domain, size)))
    return out


@dataclass
class ExperimentResult:
    rows: list[dict]
    rates: list[dict]

    @property
    def passed(self) -> bool:
        return all(r["verdict"] == "pass" for r in self.rows)


def _rate_row(example, quantity, probe, samples) -> dict:
    row = {"example": example, "quantity": quantity, "f": probe,
           "exponent": None, "intercept": None, "r_squared": None}
    usable = [(n, v) for n, v in samples if v > 0 and math.isfinite(v)]
    if len(usable) >= 3:
        fit = fit_rate(usable)
        row.update(exponent=fit.exponent, intercept=fit.intercept, r_squared=fit.r_squared)
    return row


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    config = replace(config).validate()
    family, domain, size = build_family(config)
    probes = probe_suite(config, domain, size)
    rows = []
    for n in config.n:
        for name, f in probes:
            try:
                rep = operator_bound(family, f, n, config.mode)
            except ValueError as exc:
                raise ConfigError(f"n={n}: {exc}") from exc
            rows.append({
                "example": config.example, "n": n, "mu": rep.mu, "m_const": rep.m_const,
                "bound": rep.bound, "observed": rep.observed, "margin": rep.margin,
                "verdict": rep.verdict, "f": name,
            })
    first = probes[0][0]
    rates = [_rate_row(config.example, "mu", "", [(r["n"], r["mu"]) for r in rows if r["f"] == first])]
    for name, _ in probes:
        rates.append(_rate_row(config.example, "observed", name,
                               [(r["n"], r["observed"]) for r in rows if r["f"] == name]))
    return ExperimentResult(rows, rates)


def precond_report(symbol: str, n: int, grid: int = 4096, seed: int = 0, trials: int = 200):
    """Per grid point: preconditioner eigenvalue, quadratic form and symbol value.

    Returns ``(rows, optimality_report)``.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    g = _sampler(symbol, "symbol")
    f = GridFunction.sample(g, CIRCLE, grid)
    try:
        coeffs = fourier_coefficients(f, n - 1)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    A = toeplitz_build(coeffs, n)
    frame = UnitaryFrame(n)
    P, lam = preconditioner(A.dense, frame)
    x = frame.points
    qf = np.atleast_1d(quadratic_form(coeffs, n, x))
    sym = g(x)
    rows = [{"k": k, "x": float(x[k]), "eigenvalue": float(np.real(lam[k])),
             "quadratic_form": float(qf[k]), "symbol": float(sym[k])} for k in range(n)]
    opt = frobenius_optimality_check(A.dense, P, frame, trials=trials, seed=seed)
    return rows, opt


# --------------------------------------------------------------------------
# rendering


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) for c in columns])
    return buf.getvalue()


def render(result: ExperimentResult, fmt: str, rows: bool = True, rates: bool = True) -> str:
    if fmt == "json":
        doc = {}
        if rows:
            doc["rows"] = result.rows
        if rates:
            doc["rates"] = result.rates
        return json.dumps(doc, indent=2) + "\n"
    parts = []
    if rows:
        parts.append(_csv(result.rows, CSV_COLUMNS))
    if rates:
        parts.append(_csv(result.rates, RATE_COLUMNS))
    return "\n".join(parts)


# --------------------------------------------------------------------------
# argument handling


def _n_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad n-list {text!r}") from None


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="korovkin", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("verify", "rates"):
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON file with experiment settings")
        s.add_argument("--example", choices=sorted(EXAMPLES))
        s.add_argument("--n", type=_n_list)
        s.add_argument("--f", action="append", help="probe expression (repeatable)")
        s.add_argument("--a")
        s.add_argument("--an-template", dest="an_template")
        s.add_argument("--b")
        s.add_argument("--cn")
        s.add_argument("--dn")
        s.add_argument("--y")
        s.add_argument("--d", type=int)
        s.add_argument("--grid", type=int)
        s.add_argument("--t-points", dest="t_points", type=int)
        s.add_argument("--mode", choices=[ops.ALGEBRAIC, ops.TRIGONOMETRIC])
        s.add_argument("--format", choices=["csv", "json"])
        s.add_argument("--seed", type=int)
    s = sub.add_parser("precond")
    s.add_argument("--symbol", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--grid", type=int, default=4096)
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--seed", type=int, default=0)
    return p


def config_from_args(args) -> ExperimentConfig:
    settings = {}
    if args.config:
        try:
            with open(args.config) as fh:
                settings = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(settings, dict):
            raise ConfigError("config file must hold a JSON object")
        known = {f.name for f in fields(ExperimentConfig)}
        unknown = set(settings) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if isinstance(settings.get("n"), str):
            settings["n"] = _n_list(settings["n"])
        if isinstance(settings.get("f"), str):
            settings["f"] = [settings["f"]]
    for f in fields(ExperimentConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            settings[f.name] = value
    if "example" not in settings:
        raise ConfigError("an example id is required (--example or config file)")
    try:
        return ExperimentConfig(**settings)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def main(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "precond":
            rows, opt = precond_report(args.symbol, args.n, args.grid, args.seed, args.trials)
            if args.format == "json":
                sys.stdout.write(json.dumps({"rows": rows, "optimality": opt._asdict()}, indent=2) + "\n")
            else:
                sys.stdout.write(_csv(rows, PRECOND_COLUMNS))
            agree = all(abs(r["eigenvalue"] - r["quadratic_form"]) <= 1e-10 for r in rows)
            return 0 if agree and opt.ok else 1
        config = config_from_args(args)
        result = run_experiment(config)
        fmt = config.format
        if args.command == "verify":
            sys.stdout.write(render(result, fmt))
        else:
            sys.stdout.write(render(result, fmt, rows=False))
        return 0 if result.passed else 1
    except (ConfigError, ExpressionError) as exc:
        print(f"korovkin: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
