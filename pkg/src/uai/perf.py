"""Benchmarked portfolio performance: finite horizon, long run, and the risk-sensitive dual."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .certainty import entropic_closed_form
from .index import FINITE, INFINITE, ZERO, IndexValue, acceptability_index, index_order_key
from .paths import FGN, ARMA, IIDGaussian, PathModelSpec, cumulative_variance, simulate_paths
from .sample import EmpiricalDistribution, from_samples, shift
from .utility import AffineWrapped, Exponential, UtilityFamily

__all__ = [
    "PerfError",
    "StrategyCandidate",
    "LongRunReport",
    "DualityReport",
    "finite_horizon_index",
    "maximize_over_strategies",
    "closed_form_gaussian_alpha",
    "longrun_trajectory",
    "classify_regime",
    "risk_sensitive_rate",
    "duality_check",
    "kg_trajectory",
    "bootstrap_index_se",
]

SLOPE_THRESHOLD = 0.2


class PerfError(ValueError):
    pass


def n_threads() -> int:
    """Thread cap from ``UAI_THREADS`` (default: available cores)."""
    raw = os.environ.get("UAI_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise PerfError(f"UAI_THREADS must be a positive integer, got {raw!r}") from None
    return os.cpu_count() or 1


def _pmap(fn, items):
    items = list(items)
    k = min(n_threads(), len(items))
    if k <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, items))


def _is_exponential(family) -> bool:
    while isinstance(family, AffineWrapped):
        family = family.inner
    return isinstance(family, Exponential)


@dataclass(frozen=True)
class StrategyCandidate:
    label: str
    terminal_log_growth: EmpiricalDistribution


def finite_horizon_index(family: UtilityFamily, candidate: StrategyCandidate, benchmark_log: float,
                         **opts) -> IndexValue:
    """alpha(ln V_T - ln G_T) for a deterministic benchmark."""
    b = float(benchmark_log)
    if not math.isfinite(b):
        raise PerfError(f"benchmark must be finite, got {benchmark_log}")
    return acceptability_index(family, shift(candidate.terminal_log_growth, -b), **opts)


def maximize_over_strategies(family: UtilityFamily, candidates: Sequence[StrategyCandidate],
                             benchmark_log: float) -> Tuple[str, List[Tuple[str, IndexValue]]]:
    """Rank candidates by index (zero < finite < infinite), ties by label."""
    if not candidates:
        raise PerfError("no candidates to rank")
    labels = [c.label for c in candidates]
    if len(set(labels)) != len(labels):
        raise PerfError("candidate labels must be unique")
    values = _pmap(lambda c: finite_horizon_index(family, c, benchmark_log), candidates)
    ranking = sorted(zip(labels, values), key=lambda lv: (_neg_key(lv[1]), lv[0]))
    return ranking[0][0], ranking


def _neg_key(v):
    tier, val = index_order_key(v)
    return (-tier, -val)


def closed_form_gaussian_alpha(m: float, lambda_rate: float, sigma_T_sq: float, T: int) -> float:
    """2 (m - lambda) T / sigma_T^2 for Gaussian S_T; 0 when m <= lambda."""
    if not (sigma_T_sq > 0):
        raise PerfError(f"sigma_T^2 must be > 0, got {sigma_T_sq}")
    if m <= lambda_rate:
        return 0.0
    return 2.0 * (m - lambda_rate) * T / sigma_T_sq


@dataclass
class LongRunReport:
    T_grid: List[int]
    alpha_values: List[IndexValue]
    regime: str
    liminf_estimate: float
    slope: Optional[float]
    slope_se: Optional[float]
    method: str
    details: Dict[str, object] = field(default_factory=dict)


def _ols_slope(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (y - y.mean())) / sxx
    if n <= 2:
        return slope, None
    resid = y - y.mean() - slope * xc
    return slope, math.sqrt(float(resid @ resid) / (n - 2) / sxx)


def classify_regime(T_grid, values: Sequence[IndexValue]):
    """Regime call from the last half of the trajectory.

    The log-log slope of the finite positive values decides: above +0.2
    divergent, below -0.2 vanishing, otherwise finite_positive.  Without
    two finite values the final classification in the tail decides.
    Returns ``(regime, liminf_estimate, slope, slope_se)``.
    """
    n = len(T_grid)
    start = n // 2
    tail_T = list(T_grid[start:])
    tail = list(values[start:])
    fin = [(t, v.value) for t, v in zip(tail_T, tail) if v.kind == FINITE and v.value > 0]
    slope = se = None
    if len(fin) >= 2:
        slope, se = _ols_slope(np.log([t for t, _ in fin]), np.log([a for _, a in fin]))
    last = tail[-1].kind
    if slope is None:
        if last == INFINITE:
            return "divergent", math.inf, None, None
        if last == ZERO:
            return "vanishing", 0.0, None, None
        return "undetermined", min(v.as_float() for v in tail), None, None
    if slope > SLOPE_THRESHOLD or last == INFINITE:
        return "divergent", math.inf, slope, se
    if slope < -SLOPE_THRESHOLD or last == ZERO:
        return "vanishing", 0.0, slope, se
    return "finite_positive", min(a for _, a in fin), slope, se


def _closed_form_value(spec, lambda_rate, T) -> IndexValue:
    m = spec.mean_rate()
    var = cumulative_variance(spec, T)
    if var <= 0:
        # degenerate: S_T is the constant (m - lambda) T
        if m - lambda_rate >= 0:
            return IndexValue(INFINITE, diagnostic="nonneg_position")
        return IndexValue(ZERO, diagnostic="expectation_negative")
    a = closed_form_gaussian_alpha(m, lambda_rate, var, T)
    if a == 0.0:
        return IndexValue(ZERO, diagnostic="expectation_negative")
    return IndexValue(FINITE, value=a, bracket=(a, a), diagnostic="closed_form")


def longrun_trajectory(family: UtilityFamily, spec: PathModelSpec, lambda_rate: float, T_grid: Sequence[int],
                       seed: int = 0, n_paths: int = 2000, method: str = "auto") -> LongRunReport:
    """alpha(S_T) along ``T_grid`` with S_T = ln V_T - lambda T, plus a regime call.

    ``method``:

    * ``exact`` -- Gaussian closed form from the model's cumulative
      variance; stationary Gaussian models with exponential utility only.
    * ``empirical`` -- the index of the Monte Carlo law of S_T over
      ``n_paths`` paths.  The same paths serve every T.
    * ``gaussian_moments`` -- Monte Carlo mean and variance of S_T plugged
      into the Gaussian closed form (exponential utility only).
    * ``auto`` -- ``exact`` where it applies, else ``empirical``.
    """
    T_grid = [int(t) for t in T_grid]
    if not T_grid or any(t < 1 for t in T_grid) or any(b <= a for a, b in zip(T_grid, T_grid[1:])):
        raise PerfError("T grid must be positive and strictly ascending")
    exact_ok = _is_exponential(family) and isinstance(spec, (IIDGaussian, ARMA, FGN))
    if method == "auto":
        method = "exact" if exact_ok else "empirical"
    details: Dict[str, object] = {}
    if method == "exact":
        if not exact_ok:
            raise PerfError("exact long-run values need exponential utility and a stationary Gaussian model")
        values = [_closed_form_value(spec, lambda_rate, T) for T in T_grid]
    elif method in ("empirical", "gaussian_moments"):
        if method == "gaussian_moments" and not _is_exponential(family):
            raise PerfError("gaussian_moments needs the exponential utility")
        r = simulate_paths(spec, T_grid[-1], seed, n_paths)
        S = np.cumsum(r - float(lambda_rate), axis=1)
        cols = [S[:, T - 1] for T in T_grid]
        if method == "empirical":
            values = _pmap(lambda c: acceptability_index(family, from_samples(c)), cols)
        else:
            values = []
            for T, c in zip(T_grid, cols):
                mean, var = float(np.mean(c)), float(np.var(c))
                if var <= 0 or mean <= 0:
                    values.append(IndexValue(INFINITE, diagnostic="nonneg_position") if var <= 0 and mean >= 0
                                  else IndexValue(ZERO, diagnostic="expectation_negative"))
                else:
                    a = 2.0 * mean / var
                    values.append(IndexValue(FINITE, value=a, bracket=(a, a), diagnostic="moment_fit"))
        details["n_paths"] = int(n_paths)
        details["seed"] = int(seed)
    else:
        raise PerfError(f"unknown method {method!r}")
    regime, liminf, slope, se = classify_regime(T_grid, values)
    return LongRunReport(T_grid, values, regime, liminf, slope, se, method, details)


def risk_sensitive_rate(gamma: float, log_value_paths, T: int, family: UtilityFamily = None) -> float:
    """-mu_gamma(ln V_T) / T under the entropic measure.

    ``log_value_paths`` is either one path of ln V_t (a degenerate law) or
    an (n_paths, n_steps) array whose column T-1 gives the law of ln V_T.
    """
    if family is not None and not _is_exponential(family):
        raise PerfError("the risk-sensitive rate is defined for the exponential utility only")
    arr = np.asarray(log_value_paths, dtype=float)
    T = int(T)
    if T < 1 or arr.shape[-1] < T:
        raise PerfError(f"paths of length {arr.shape[-1]} do not reach T={T}")
    col = arr[T - 1:T] if arr.ndim == 1 else arr[:, T - 1]
    return -entropic_closed_form(gamma, from_samples(col)).value / T


@dataclass
class DualityReport:
    lhs: float
    rhs: float
    closed_form: float
    rhs_cell: float
    rhs_se: Optional[float]
    lhs_report: LongRunReport


def _rate_root(terminal: np.ndarray, T: int, lambda_rate: float, grid: np.ndarray) -> Tuple[float, float]:
    """sup{gamma in grid: rate(gamma) >= lambda}; rate is non-increasing in gamma."""
    law = from_samples(terminal)
    ok = lambda i: -entropic_closed_form(grid[i], law).value / T >= lambda_rate
    if not ok(0):
        return 0.0, float(grid[0])
    if ok(grid.size - 1):
        return math.inf, 0.0
    lo, hi = 0, grid.size - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return float(grid[lo]), float(grid[hi] - grid[lo])


def duality_check(model: IIDGaussian, lambda_rate: float, seed: int = 0, n_paths: int = 100_000, T: int = 1,
                  gamma_grid=None, lhs_T_grid=None, bootstrap: int = 0) -> DualityReport:
    """Compare the long-run index with the risk-sensitive dual sup{gamma: rate >= lambda}.

    ``gamma_grid`` defaults to 10^4 log-spaced points on [1e-3, 1e3]; the
    rate is monotone in gamma so the supremum is located by binary search
    over the grid, which gives the same answer as a full scan.
    """
    if not isinstance(model, IIDGaussian):
        raise PerfError("the duality check is defined for the i.i.d. Gaussian model")
    grid = np.logspace(-3.0, 3.0, 10_000) if gamma_grid is None else np.asarray(gamma_grid, dtype=float)
    lhs_T_grid = lhs_T_grid or [2 ** k for k in range(6)]
    lhs_rep = longrun_trajectory(Exponential(), model, lambda_rate, lhs_T_grid, seed, n_paths)
    r = simulate_paths(model, T, seed, n_paths)
    terminal = r.sum(axis=1)
    rhs, cell = _rate_root(terminal, T, lambda_rate, grid)
    se = None
    if bootstrap and math.isfinite(rhs) and rhs > 0:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(2 ** 31,))))
        reps = [_rate_root(terminal[rng.integers(0, terminal.size, terminal.size)], T, lambda_rate, grid)[0]
                for _ in range(int(bootstrap))]
        se = float(np.std(reps, ddof=1))
    cf = closed_form_gaussian_alpha(model.m, lambda_rate, model.sigma ** 2, 1) if model.sigma > 0 else math.inf
    return DualityReport(lhs_rep.liminf_estimate, rhs, cf, cell, se, lhs_rep)


def bootstrap_index_se(family: UtilityFamily, samples, n_boot: int = 30, seed: int = 0) -> float:
    """Bootstrap standard error of the acceptability index of ``from_samples(samples)``."""
    x = np.asarray(samples, dtype=float)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(2 ** 31 + 1,))))
    reps = []
    for _ in range(int(n_boot)):
        v = acceptability_index(family, from_samples(x[rng.integers(0, x.size, x.size)]))
        reps.append(v.as_float())
    return float(np.std(reps, ddof=1))


def kg_trajectory(family: UtilityFamily, candidates_by_T: Mapping[int, Sequence[StrategyCandidate]],
                  g: Callable[[int], float]):
    """Best alpha(V_T - g(T)) per horizon over user-supplied candidate laws of V_T.

    Returns ``(rows, report)`` where rows are ``(T, best_label, IndexValue)``
    and report is the regime classification of the best values.
    """
    Ts = sorted(int(t) for t in candidates_by_T)
    rows = []
    for T in Ts:
        best, ranking = maximize_over_strategies(family, candidates_by_T[T], g(T))
        rows.append((T, best, ranking[0][1]))
    return rows, classify_regime(Ts, [v for _, _, v in rows])
