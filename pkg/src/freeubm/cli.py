"""Command-line front end.

Every command emits a report, JSON by default::

    {"command": ..., "params": {...}, "results": [...], "elapsed_s": ..., "seed": ...}

Exit codes: 0 when every requested check passes, 2 on usage errors, 3 on a
numerical failure (a failed check, a cross-method disagreement or an error
raised by the numerics).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from typing import Callable, Sequence

from . import __version__
from .mcsim import SimConfig, estimate_haar_word_moments, estimate_word_moments
from .moments import (
    DEFAULT_STEP,
    CheckReport,
    jacobi_even_half_series,
    jacobi_even_ode,
    mixed_coeff_grid,
    mixed_moment_closed,
    mixed_ode_table,
    moment_PY_closed,
    odd_half_closed,
    odd_ode,
    verify_biane_inverse,
    verify_constancy,
    verify_functional_relation,
    verify_oddeven,
    verify_stationary,
    verify_w_square,
)
from .noncrossing import (
    NCPartition,
    _block_lists,
    _kreweras_blocks,
    binom_weight_rhs,
    kreweras,
    mixed_R_m1_comb,
    moment_PY_cumulant,
    weight_sum,
    word_moment_cumulant,
)
from .specfun import ModelParams

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

SUITES = ("binom", "kreweras", "w-square", "oddeven", "stationary", "constancy", "biane", "fr", "cross-method")
DEFAULT_T_GRID = (0.0, 0.5, 1.0, 2.0)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# serialization


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    # keep a float look for integral values so readers do not see ints
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "item"):  # numpy scalar
        return to_json(obj.item(), indent, _level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    rows = report["results"]
    if rows and "check" in rows[0]:
        w.writerow(["check", "residual", "tolerance", "pass"])
        for r in rows:
            w.writerow([r["check"], _fmt_float(r["residual"]), _fmt_float(r["tolerance"]), str(r["pass"]).lower()])
    else:
        extra = ["stderr"] if rows and "stderr" in rows[0] else []
        w.writerow(["index", "method", "value"] + extra)
        for r in rows:
            w.writerow([r["index"], r["method"], _fmt_float(r["value"])] + [_fmt_float(r[k]) for k in extra])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# helpers


def _methods(arg: str, allowed: Sequence[str]) -> list[str]:
    out = [m.strip() for m in arg.split(",") if m.strip()]
    bad = [m for m in out if m not in allowed]
    if not out or bad:
        raise UsageError(f"unknown method(s) {bad or arg!r}; choose from {', '.join(allowed)}")
    return out


def _floats(arg: str) -> list[float]:
    try:
        return [float(x) for x in arg.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {arg!r}") from None


def _params(args) -> ModelParams:
    try:
        return ModelParams(args.alpha, args.t)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _value_rows(table: dict[str, dict], keys) -> list[dict]:
    return [
        {"index": _index(k), "method": method, "value": float(values[k])}
        for method, values in table.items()
        for k in keys
    ]


def _index(k) -> str | int:
    return ",".join(map(str, k)) if isinstance(k, tuple) else k


def _agreement(table: dict[str, dict], keys, tol: float) -> dict:
    """Largest deviation of each method from the first, relative to max(1, |ref|)."""
    methods = list(table)
    ref = table[methods[0]]
    worst = 0.0
    for m in methods[1:]:
        for k in keys:
            dev = abs(table[m][k] - ref[k]) / max(1.0, abs(ref[k]))
            worst = max(worst, dev)
    return {"reference": methods[0], "max_deviation": worst, "tolerance": tol, "pass": worst <= tol}


def _check_row(rep: CheckReport, name: str | None = None) -> dict:
    return {
        "check": name or rep.check,
        "method": "verify",
        "residual": float(rep.residual),
        "tolerance": float(rep.tolerance),
        "pass": bool(rep.passed),
    }


def _row(name: str, residual: float, tol: float) -> dict:
    return {"check": name, "method": "verify", "residual": float(residual), "tolerance": tol, "pass": residual <= tol}


# ---------------------------------------------------------------------------
# compute commands


def cmd_moments(args) -> dict:
    p = _params(args)
    methods = _methods(args.method, ("closed", "cumulant"))
    if not 0 <= args.n <= 14:
        raise UsageError("--n must lie in 0..14")
    keys = list(range(args.n + 1))
    fns = {"closed": moment_PY_closed, "cumulant": moment_PY_cumulant}
    table = {m: {n: fns[m](n, p.alpha, p.t) for n in keys} for m in methods}
    return {
        "params": {"alpha": p.alpha, "t": p.t, "n": args.n},
        "results": _value_rows(table, keys),
        "agreement": _agreement(table, keys, args.tol),
    }


def cmd_mixed(args) -> dict:
    p = _params(args)
    methods = _methods(args.method, ("closed", "ode", "comb", "cumulant"))
    if args.m < 0 or args.n < 0:
        raise UsageError("--m and --n must be non-negative")
    if "comb" in methods and args.n != 1:
        raise UsageError("method 'comb' only covers n = 1")
    if "cumulant" in methods and args.m + args.n > 12:
        raise UsageError("method 'cumulant' needs m + n <= 12")
    keys = [(m, n) for m in range(args.m + 1) for n in range(args.n + 1)]
    if "comb" in methods:
        keys = [(m, 1) for m in range(1, args.m + 1)]
    table: dict[str, dict] = {}
    for method in methods:
        if method == "closed":
            grid = mixed_coeff_grid(p.alpha, p.t, max(args.m, args.n, 1))
            table[method] = {k: mixed_moment_closed(*k, p.alpha, p.t, grid) for k in keys}
        elif method == "ode":
            tab = mixed_ode_table(max(args.m, 1), max(args.n, 1), p.alpha, p.t, args.step)
            table[method] = {k: tab[k] for k in keys}
        elif method == "comb":
            table[method] = {k: mixed_R_m1_comb(k[0], p.alpha, p.t) for k in keys}
        else:
            table[method] = {
                (m, n): math.exp(p.t * (m + n) / 2) * word_moment_cumulant("A" * m + "A*" * n, p.alpha, p.t)
                if m + n
                else p.alpha
                for m, n in keys
            }
    return {
        "params": {"alpha": p.alpha, "t": p.t, "m": args.m, "n": args.n, "step": args.step},
        "results": _value_rows(table, keys),
        "agreement": _agreement(table, keys, args.tol),
    }


def _half_only(p: ModelParams, method: str):
    if p.alpha != 0.5:
        raise UsageError(f"method {method!r} needs --alpha 0.5")


def cmd_even(args) -> dict:
    p = _params(args)
    methods = _methods(args.method, ("ode", "closed", "cumulant"))
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    keys = list(range(args.n + 1))
    table: dict[str, dict] = {}
    for method in methods:
        if method == "ode":
            tab = jacobi_even_ode(args.n, p.alpha, p.t, args.step)
            table[method] = {k: tab[k] for k in keys}
        elif method == "closed":
            _half_only(p, method)
            D = max(args.degree or 0, args.n)
            N = jacobi_even_half_series(p.t, D)
            table[method] = {0: 0.5, **{k: float(N[k]) for k in keys[1:]}}
        else:
            if 2 * args.n > 14:
                raise UsageError("method 'cumulant' needs n <= 7")
            table[method] = {0: p.alpha, **{k: word_moment_cumulant("AA*" * k, p.alpha, p.t) for k in keys[1:]}}
    return {
        "params": {"alpha": p.alpha, "t": p.t, "n": args.n, "step": args.step, "degree": args.degree},
        "results": _value_rows(table, keys),
        "agreement": _agreement(table, keys, args.tol),
    }


def cmd_odd(args) -> dict:
    p = _params(args)
    methods = _methods(args.method, ("ode", "closed", "convolution", "cumulant"))
    if args.n < 0:
        raise UsageError("--n must be >= 0")
    keys = list(range(args.n + 1))
    table: dict[str, dict] = {}
    for method in methods:
        if method == "ode":
            tab = odd_ode(args.n, p.alpha, p.t, args.step)
        elif method in ("closed", "convolution"):
            _half_only(p, method)
            route = "compose" if method == "closed" else "convolution"
            tab = odd_half_closed(args.n, p.t, args.degree, route)
        else:
            if 2 * args.n + 1 > 13:
                raise UsageError("method 'cumulant' needs n <= 6")
            tab = {k: word_moment_cumulant("AA*" * k + "A", p.alpha, p.t) for k in keys}
        table[method] = {k: tab[k] for k in keys}
    return {
        "params": {"alpha": p.alpha, "t": p.t, "n": args.n, "step": args.step, "degree": args.degree},
        "results": _value_rows(table, keys),
        "agreement": _agreement(table, keys, args.tol),
    }


def cmd_coeffs(args) -> dict:
    p = _params(args)
    J = args.degree or 6
    if J < 1:
        raise UsageError("--degree must be >= 1")
    grid = mixed_coeff_grid(p.alpha, p.t, J)
    rows = [
        {"index": f"{j},{k}", "method": "inverse-series", "value": float(grid.c[j, k])}
        for j in range(J + 1)
        for k in range(J + 1)
    ]
    sym = grid.is_symmetric()
    return {
        "params": {"alpha": p.alpha, "t": p.t, "degree": J},
        "results": rows,
        "agreement": {"reference": "symmetry", "max_deviation": 0.0 if sym else 1.0, "tolerance": 1e-12, "pass": sym},
    }


# ---------------------------------------------------------------------------
# verify


def _suite_binom(args) -> list[dict]:
    rows = []
    for n in range(1, 10):
        for r in range(n):
            lhs, rhs = weight_sum(n, r), binom_weight_rhs(n, r)
            rows.append(_row(f"binom(n={n},r={r})", abs(lhs - rhs) / abs(rhs), 1e-10))
    return rows


def _suite_kreweras(args) -> list[dict]:
    rows = []
    examples = [
        (((1,), (2,), (3,), (4, 5)), ((1, 2, 3, 5), (4,))),
        (((1,), (2,), (4,), (3, 5)), ((1, 2, 5), (3, 4))),
    ]
    for blocks, expected in examples:
        pi = NCPartition(5, blocks)
        got = kreweras(pi)
        rows.append(_row(f"kreweras({pi})", 0.0 if got == NCPartition(5, expected) else 1.0, 0.0))
    for n in range(1, 10):
        bad = sum(len(_kreweras_blocks(n, b)) != n + 1 - len(b) for b in _block_lists(n))
        rows.append(_row(f"kreweras-count(n={n})", float(bad), 0.0))
    return rows


def _suite_series(fn: Callable, name: str, default_tol: float) -> Callable:
    def run(args) -> list[dict]:
        D = args.degree or 12
        tol = args.tol or default_tol
        return [_check_row(fn(t, D, tol), f"{name}(t={t:g})") for t in args.t_grid]

    return run


def _suite_stationary(args) -> list[dict]:
    return [_check_row(verify_stationary(args.degree or 12, args.tol or 1e-8))]


def _suite_constancy(args) -> list[dict]:
    rows = []
    for n in (1, 2, 3):
        rep = verify_constancy(n, args.t_grid, args.step, args.tol or 1e-8)
        rows.append(_check_row(rep, f"constancy(n={n})"))
        gap = abs(rep.detail["F"][0] - rep.detail["expected_constant"])
        rows.append(_row(f"constancy-value(n={n})", gap, args.tol or 1e-8))
    return rows


def _rel_dev(ref: float, value: float, scale: float) -> float:
    # relative to max(|ref|, scale) so that exact zeros of ref stay well defined
    return abs(value - ref) / max(abs(ref), scale)


def _suite_cross(args) -> list[dict]:
    rows = []
    for alpha in (0.25, 0.5, 0.9, 1.0):
        for t in args.t_grid:
            dev = max(_rel_dev(moment_PY_closed(n, alpha, t), moment_PY_cumulant(n, alpha, t), alpha * math.exp(-n * t / 2)) for n in range(1, 10))
            rows.append(_row(f"moments closed~cumulant(a={alpha:g},t={t:g})", dev, 1e-10))
    for alpha in (0.25, 0.5, 0.9):
        for t in [t for t in args.t_grid if t > 0]:
            grid = mixed_coeff_grid(alpha, t, 8)
            ode = mixed_ode_table(6, 6, alpha, t, args.step)
            dev = max(abs(mixed_moment_closed(m, n, alpha, t, grid) - ode[(m, n)]) for m in range(7) for n in range(7))
            rows.append(_row(f"mixed closed~ode(a={alpha:g},t={t:g})", dev, 1e-6))
            dev = max(abs(mixed_moment_closed(m, 1, alpha, t, grid) - mixed_R_m1_comb(m, alpha, t)) for m in range(1, 9))
            rows.append(_row(f"mixed closed~comb(a={alpha:g},t={t:g})", dev, 1e-8))
    for t in [t for t in args.t_grid if t > 0]:
        closed = odd_half_closed(8, t)
        ode = odd_ode(8, 0.5, t, args.step)
        dev = max(abs(closed[n] - ode[n]) for n in range(9))
        rows.append(_row(f"odd closed~ode(t={t:g})", dev, 1e-6))
        N = jacobi_even_half_series(t, 10)
        even = jacobi_even_ode(10, 0.5, t, args.step)
        dev = max(abs(N[n] - even[n]) for n in range(1, 11))
        rows.append(_row(f"even closed~ode(t={t:g})", dev, 1e-7))
    return rows


_SUITE_FNS = {
    "binom": _suite_binom,
    "kreweras": _suite_kreweras,
    "w-square": _suite_series(verify_w_square, "w-square", 1e-8),
    "oddeven": _suite_series(verify_oddeven, "oddeven", 1e-8),
    "stationary": _suite_stationary,
    "constancy": _suite_constancy,
    "biane": _suite_series(verify_biane_inverse, "biane-inverse", 1e-9),
    "fr": _suite_series(verify_functional_relation, "functional-relation", 1e-9),
    "cross-method": _suite_cross,
}


def cmd_verify(args) -> dict:
    suites = list(SUITES) if args.suite == "all" else [args.suite]
    args.t_grid = _floats(args.t_grid) if args.t_grid else list(DEFAULT_T_GRID)
    if any(t < 0 for t in args.t_grid):
        raise UsageError("--t-grid entries must be non-negative")
    rows = []
    for s in suites:
        for row in _SUITE_FNS[s](args):
            rows.append({"suite": s, **row})
    return {
        "params": {"suite": args.suite, "t_grid": args.t_grid, "degree": args.degree or 12, "step": args.step},
        "results": rows,
    }


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> dict:
    words = args.word or ["A"]
    try:
        cfg = SimConfig(dim=args.dim, t=args.t, steps=args.steps, samples=args.samples, seed=args.seed, alpha=args.alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        run = estimate_haar_word_moments if args.haar else estimate_word_moments
        estimates = run(cfg, words, workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = [
        {"index": e.word, "method": "haar-mc" if args.haar else "mc", "value": e.mean, "stderr": e.stderr}
        for e in estimates
    ]
    params = {
        "alpha": cfg.alpha,
        "t": None if args.haar else cfg.t,
        "dim": cfg.dim,
        "rank": cfg.rank,
        "steps": None if args.haar else cfg.steps,
        "samples": cfg.samples,
    }
    return {"params": params, "results": rows}


# ---------------------------------------------------------------------------
# parser and entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--degree", type=int, default=None, help="series degree cap")
    common.add_argument("--step", type=float, default=DEFAULT_STEP, help="RK4 step")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (simulate)")

    model = _Parser(add_help=False)
    model.add_argument("--alpha", type=float, default=0.5)
    model.add_argument("--t", type=float, default=1.0)

    parser = _Parser(prog="freeubm", description="Moments of a free unitary Brownian motion compressed by a free projection.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("moments", parents=[common, model], help="tau[(PY)^n]")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--method", default="closed,cumulant")
    p.add_argument("--tol", type=float, default=1e-10)

    p = sub.add_parser("mixed", parents=[common, model], help="mixed moments R_{m,n}")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--method", default="closed,ode")
    p.add_argument("--tol", type=float, default=1e-6)

    p = sub.add_parser("even", parents=[common, model], help="even alternating moments r_n")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--method", default="ode")
    p.add_argument("--tol", type=float, default=1e-7)

    p = sub.add_parser("odd", parents=[common, model], help="odd alternating moments s_{n,1}")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--method", default="ode")
    p.add_argument("--tol", type=float, default=1e-6)

    p = sub.add_parser("coeffs", parents=[common, model], help="Taylor coefficients c_{j,k} of -1/g")

    p = sub.add_parser("verify", parents=[common], help="identity suites")
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.add_argument("--t", dest="t_grid", default=None, help="comma-separated times (default 0,0.5,1,2)")
    p.add_argument("--tol", type=float, default=None, help="override the per-suite tolerance")

    p = sub.add_parser("simulate", parents=[common, model], help="Monte Carlo word moments")
    p.add_argument("--word", action="append", help="word over A, A* (repeatable), e.g. AA*")
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--haar", action="store_true", help="replace Y_t by a Haar unitary")
    p.add_argument("--workers", type=int, default=1)
    return parser


_COMMANDS = {
    "moments": cmd_moments,
    "mixed": cmd_mixed,
    "even": cmd_even,
    "odd": cmd_odd,
    "coeffs": cmd_coeffs,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
}


def _passed(report: dict) -> bool:
    ok = all(r.get("pass", True) for r in report["results"])
    if "agreement" in report:
        ok = ok and report["agreement"]["pass"]
    return ok


def _failures(report: dict) -> list[str]:
    names = [r["check"] for r in report["results"] if not r.get("pass", True)]
    if "agreement" in report and not report["agreement"]["pass"]:
        names.append(f"agreement with {report['agreement']['reference']}")
    return names


def run_command(argv: Sequence[str] | None = None) -> tuple[int, dict, argparse.Namespace]:
    """Parse, execute and return (exit code, report, parsed args); nothing is printed."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and args.seed is None:
        args.seed = 0
    start = time.perf_counter()
    report = _COMMANDS[args.command](args)
    elapsed = time.perf_counter() - start
    out = {"command": args.command, "params": report["params"], "results": report["results"]}
    if "agreement" in report:
        out["agreement"] = report["agreement"]
    # simulate output must be byte-identical for a fixed seed, so no wall time there
    out["elapsed_s"] = None if args.command == "simulate" else elapsed
    if args.seed is not None:
        out["seed"] = args.seed
    return (EXIT_OK if _passed(out) else EXIT_NUMERIC), out, args


def main(argv: Sequence[str] | None = None) -> int:
    try:
        code, report, args = run_command(argv)
    except UsageError as exc:
        print(f"freeubm: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (ArithmeticError, ValueError) as exc:
        print(f"freeubm: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = to_csv(report) if args.format == "csv" else to_json(report) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if code != EXIT_OK:
        print(f"freeubm: failed checks: {', '.join(_failures(report))}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
