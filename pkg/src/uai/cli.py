"""Command-line front end.

Each invocation prints exactly one JSON document on stdout.  Exit status
is 0 on success, 2 on a usage error (message on stderr) and 1 when the
computation fails (an ``{"error": ...}`` document on stdout).
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys

import numpy as np

from . import __version__
from .certainty import certainty_equivalent, gaussian_entropic
from .index import IndexValue, acceptability_index
from .paths import ARMA, FGN, OU, IIDGaussian, PathError, parse_model, simulate
from .perf import (
    StrategyCandidate,
    _is_exponential,
    duality_check,
    finite_horizon_index,
    longrun_trajectory,
    maximize_over_strategies,
)
from .sample import from_samples, read_csv, shift, write_csv
from .utility import UtilityError, check_scale_aversion_regularity, parse_utility

__all__ = ["main", "run", "dumps"]


def _num(x):
    x = float(x)
    if math.isnan(x):
        return "null"
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dumps(obj) -> str:
    """Deterministic JSON: insertion-ordered keys, floats with 17 significant digits, inf as "inf"."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _alpha(v: IndexValue):
    if v.kind == "infinite":
        return math.inf
    if v.kind == "zero":
        return 0
    return v.value


def _index_doc(v: IndexValue) -> dict:
    return {
        "alpha": _alpha(v),
        "kind": v.kind,
        "diagnostic": v.diagnostic,
        "bracket": list(v.bracket) if v.bracket else None,
        "evals": v.evaluations,
    }


# argparse type converters: bad values become usage errors (exit 2)

def _utility(text):
    try:
        return parse_utility(text)
    except (UtilityError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _pair(text):
    try:
        m, s = (float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected m,sigma, got {text!r}")
    return m, s


def _floats(text):
    try:
        return tuple(float(t) for t in text.replace("/", ",").split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _tgrid(text):
    """``32:2048:x2`` (geometric), ``10:100:+10`` (arithmetic) or ``32,64,128``."""
    try:
        if ":" in text:
            a, b, step = text.split(":")
            a, b = int(a), int(b)
            out = []
            t = a
            if step.startswith("x"):
                f = int(step[1:])
                if f < 2:
                    raise ValueError
                while t <= b:
                    out.append(t)
                    t *= f
            else:
                d = int(step.lstrip("+"))
                if d < 1:
                    raise ValueError
                out = list(range(a, b + 1, d))
        else:
            out = [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad T grid {text!r}")
    if not out or out[0] < 1 or any(y <= x for x, y in zip(out, out[1:])):
        raise argparse.ArgumentTypeError(f"T grid must be positive and ascending: {text!r}")
    return out


def _grid(kind):
    def conv(text):
        try:
            lo, hi, n = text.split(":")
            lo, hi, n = float(lo), float(hi), int(n)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected lo:hi:n, got {text!r}")
        if n < 1 or hi < lo or (kind == "log" and lo <= 0):
            raise argparse.ArgumentTypeError(f"bad grid {text!r}")
        return (lo, hi, n)
    return conv


def _model_arg(text):
    try:
        return parse_model(text) if ":" in text else text.lower()
    except PathError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _candidate(text):
    label, sep, path = text.partition("=")
    if not sep or not label or not path:
        raise argparse.ArgumentTypeError(f"expected LABEL=path, got {text!r}")
    return label, path


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uai", description="Utility-based acceptability index engine.")
    p.add_argument("--version", action="version", version=f"uai {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("ce", help="scaled certainty equivalent mu_gamma")
    c.add_argument("--utility", type=_utility, default="exp")
    c.add_argument("--gamma", type=float, required=True)
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="CSV of outcomes (equally likely)")
    src.add_argument("--gaussian", type=_pair, metavar="M,SIGMA", help="closed form for N(m, sigma^2), exp only")

    i = sub.add_parser("index", help="acceptability index of a sample")
    i.add_argument("--utility", type=_utility, default="exp")
    i.add_argument("--input", required=True)
    i.add_argument("--benchmark-rate", type=float, default=0.0)
    i.add_argument("--gamma-min", type=float, default=1e-8)
    i.add_argument("--gamma-cap", type=float, default=1e8)
    i.add_argument("--tol-rel", type=float, default=1e-8)

    f = sub.add_parser("perf", help="finite-horizon benchmarked index of terminal log-growth samples")
    f.add_argument("--utility", type=_utility, default="exp")
    f.add_argument("--input", required=True)
    f.add_argument("--benchmark", type=float, required=True, help="ln G_T")

    mx = sub.add_parser("maximize", help="rank candidate strategies by benchmarked index")
    mx.add_argument("--utility", type=_utility, default="exp")
    mx.add_argument("--candidate", type=_candidate, action="append", required=True, metavar="LABEL=CSV")
    mx.add_argument("--benchmark", type=float, required=True)

    lr = sub.add_parser("longrun", help="index trajectory of S_T = ln V_T - lambda T")
    lr.add_argument("--utility", type=_utility, default="exp")
    lr.add_argument("--model", type=_model_arg, required=True, help="e.g. fgn:hurst=0.3,sigma=0.2,mean=0.05")
    lr.add_argument("--lambda", dest="lambda_rate", type=float, default=0.0)
    lr.add_argument("--tgrid", type=_tgrid, default=_tgrid("32:2048:x2"))
    lr.add_argument("--paths", type=int, default=2000)
    lr.add_argument("--seed", type=int, default=0)
    lr.add_argument("--method", choices=("auto", "exact", "empirical", "gaussian_moments"), default="auto")

    s = sub.add_parser("simulate", help="simulate a return series to CSV")
    s.add_argument("--model", type=_model_arg, required=True, help="iid | arma | fgn | ou, or a full model string")
    s.add_argument("--mean", type=float, default=0.0)
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--hurst", type=float, default=0.5)
    s.add_argument("--phi", type=_floats, default=())
    s.add_argument("--theta", type=_floats, default=())
    s.add_argument("--kappa", type=float, default=1.0)
    s.add_argument("--theta-level", type=float, default=0.0)
    s.add_argument("--x0", type=float, default=0.0)
    s.add_argument("--dt", type=float, default=1.0)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    r = sub.add_parser("regularity", help="grid audit of scale aversion regularity")
    r.add_argument("--utility", type=_utility, required=True)
    r.add_argument("--gamma-grid", type=_grid("log"), default=(1e-2, 1e2, 64), metavar="LO:HI:N")
    r.add_argument("--x-grid", type=_grid("lin"), default=(-20.0, 20.0, 401), metavar="LO:HI:N")
    r.add_argument("--tol", type=float, default=1e-9)

    d = sub.add_parser("duality", help="long-run index vs risk-sensitive dual, i.i.d. Gaussian returns")
    d.add_argument("--m", type=float, required=True)
    d.add_argument("--sigma", type=float, required=True)
    d.add_argument("--lambda", dest="lambda_rate", type=float, required=True)
    d.add_argument("--paths", type=int, default=100_000)
    d.add_argument("--T", type=int, default=1)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--bootstrap", type=int, default=0)
    return p


def _config(args) -> dict:
    out = {}
    for k, v in vars(args).items():
        if hasattr(v, "spec"):
            v = v.spec()
        elif isinstance(v, list) and v and isinstance(v[0], tuple):
            v = [f"{a}={b}" for a, b in v]
        out[k] = v
    return out


def _load(path):
    return from_samples(read_csv(path).values)


def _cmd_ce(args):
    u = args.utility
    if args.gaussian is not None:
        if not _is_exponential(u):
            raise _Usage("--gaussian is only available for the exponential utility")
        m, sigma = args.gaussian
        return {"mu": gaussian_entropic(args.gamma, m, sigma), "gamma": args.gamma, "utility": u.spec()}
    v = certainty_equivalent(u, args.gamma, _load(args.input))
    return {"mu": v.value, "gamma": args.gamma, "utility": u.spec()}


def _cmd_index(args):
    dist = _load(args.input)
    if args.benchmark_rate:
        dist = shift(dist, -args.benchmark_rate)
    v = acceptability_index(args.utility, dist, gamma_min=args.gamma_min, gamma_cap=args.gamma_cap,
                            tol_rel=args.tol_rel)
    return _index_doc(v)


def _cmd_perf(args):
    cand = StrategyCandidate("input", _load(args.input))
    doc = _index_doc(finite_horizon_index(args.utility, cand, args.benchmark))
    doc["benchmark"] = args.benchmark
    return doc


def _cmd_maximize(args):
    cands = [StrategyCandidate(label, _load(path)) for label, path in args.candidate]
    best, ranking = maximize_over_strategies(args.utility, cands, args.benchmark)
    return {"best": best, "ranking": [dict(label=lab, **_index_doc(v)) for lab, v in ranking]}


def _cmd_longrun(args):
    if isinstance(args.model, str):
        raise _Usage("longrun needs a full model string, e.g. fgn:hurst=0.3,sigma=0.2,mean=0.05")
    rep = longrun_trajectory(args.utility, args.model, args.lambda_rate, args.tgrid, args.seed, args.paths,
                             args.method)
    return {
        "regime": rep.regime,
        "liminf": rep.liminf_estimate,
        "slope": rep.slope,
        "slope_se": rep.slope_se,
        "method": rep.method,
        "trajectory": [dict(T=T, **_index_doc(v)) for T, v in zip(rep.T_grid, rep.alpha_values)],
    }


def _simulate_spec(args):
    if not isinstance(args.model, str):
        return args.model
    kind = args.model
    if kind in ("iid", "iid_gaussian", "gaussian"):
        return IIDGaussian(args.mean, args.sigma)
    if kind == "fgn":
        return FGN(args.hurst, args.sigma, args.mean)
    if kind == "arma":
        return ARMA(args.phi, args.theta, args.mean, args.sigma)
    if kind == "ou":
        return OU(args.kappa, args.theta_level, args.sigma, args.x0, args.dt)
    raise _Usage(f"unknown model {kind!r}")


def _cmd_simulate(args):
    spec = _simulate_spec(args)
    series = simulate(spec, args.n, args.seed)
    write_csv(series, args.out)
    v = series.values
    return {"out": args.out, "n": int(v.size), "model": spec.spec(),
            "summary": {"mean": float(np.mean(v)), "std": float(np.std(v)), "min": float(v.min()),
                        "max": float(v.max())}}


def _cmd_regularity(args):
    glo, ghi, gn = args.gamma_grid
    xlo, xhi, xn = args.x_grid
    rep = check_scale_aversion_regularity(args.utility, np.logspace(math.log10(glo), math.log10(ghi), gn),
                                          np.linspace(xlo, xhi, xn), args.tol)
    witness = None
    if rep.witness is not None:
        witness = dict(zip(("gamma1", "gamma2", "x", "A1", "A2"), rep.witness))
    return {
        "utility": args.utility.spec(),
        "verdict": rep.verdict,
        "witness": witness,
        "max_drop": rep.max_drop,
        "n_nonfinite": rep.n_nonfinite,
        "grids": {"gamma": {"lo": glo, "hi": ghi, "n": gn, "spacing": "log"},
                  "x": {"lo": xlo, "hi": xhi, "n": xn, "spacing": "linear"}},
    }


def _cmd_duality(args):
    rep = duality_check(IIDGaussian(args.m, args.sigma), args.lambda_rate, args.seed, args.paths, args.T,
                        bootstrap=args.bootstrap)
    return {"lhs": rep.lhs, "rhs": rep.rhs, "closed_form": rep.closed_form, "rhs_cell": rep.rhs_cell,
            "rhs_se": rep.rhs_se}


_COMMANDS = {
    "ce": _cmd_ce,
    "index": _cmd_index,
    "perf": _cmd_perf,
    "maximize": _cmd_maximize,
    "longrun": _cmd_longrun,
    "simulate": _cmd_simulate,
    "regularity": _cmd_regularity,
    "duality": _cmd_duality,
}


class _Usage(Exception):
    pass


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    config = _config(args)
    try:
        doc = _COMMANDS[args.command](args)
    except _Usage as exc:
        print(f"uai {args.command}: error: {exc}", file=stderr)
        return 2
    except (ValueError, ArithmeticError, OSError) as exc:
        stdout.write(dumps({"error": {"type": type(exc).__name__, "message": str(exc)}, "config": config}) + "\n")
        return 1
    doc["config"] = config
    stdout.write(dumps(doc) + "\n")
    return 0


def main():
    sys.exit(run())
