"""Scaled certainty equivalents and related risk functionals.

The sign convention is that of a risk measure: ``mu_gamma(X)`` is minus
the certainty equivalent of ``X`` under ``U(gamma * .)``, so a point mass at
``c`` has ``mu = -c`` and smaller is better.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._roots import BracketError, bisect_predicate, expand_bracket, golden_max
from .sample import EmpiricalDistribution, moments, shift
from .utility import UtilityFamily, as_gamma

__all__ = [
    "CEValue",
    "CertaintyError",
    "certainty_equivalent",
    "ce",
    "entropic_closed_form",
    "gaussian_entropic",
    "oce",
    "cash_additive_hull",
    "mv_approx",
]


class CertaintyError(ArithmeticError):
    pass


@dataclass(frozen=True)
class CEValue:
    value: float
    finite_flag: bool

    def __post_init__(self):
        if not self.finite_flag and self.value != math.inf:
            raise ValueError("a non-finite CEValue must be +inf")

    def __float__(self):
        return self.value

    @classmethod
    def of(cls, v: float) -> "CEValue":
        v = float(v)
        if v == math.inf:
            return cls(math.inf, False)
        if not math.isfinite(v):
            raise CertaintyError(f"certainty equivalent evaluated to {v}")
        return cls(v, True)


def ce(family: UtilityFamily, gamma: float, dist: EmpiricalDistribution) -> float:
    """``certainty_equivalent`` as a plain float (+inf allowed)."""
    g = as_gamma(gamma)
    d = dist.support()
    if d.outcomes.size == 1:
        # U^{-1}(U(gamma c)) / gamma = c; skip the inverse round-off
        return -float(d.outcomes[0])
    core = family.core(g * d.outcomes, d.probabilities)
    if core == -math.inf:
        return math.inf
    return -core / g


def certainty_equivalent(family: UtilityFamily, gamma, dist: EmpiricalDistribution) -> CEValue:
    """mu_gamma(X) = -(1/gamma) U^{-1}(E[U(gamma X)])."""
    return CEValue.of(ce(family, gamma, dist))


def entropic_closed_form(gamma, dist: EmpiricalDistribution) -> CEValue:
    """(1/gamma) log E[exp(-gamma X)], evaluated with a shifted log-sum-exp."""
    g = as_gamma(gamma)
    keep = dist.probabilities > 0
    a = -g * dist.outcomes[keep]
    m = a.max()
    s = math.fsum((dist.probabilities[keep] * np.exp(a - m)).tolist())
    return CEValue.of((m + math.log(s)) / g)


def gaussian_entropic(gamma, m: float, sigma: float) -> float:
    """Entropic risk of N(m, sigma^2): -m + gamma sigma^2 / 2."""
    g = as_gamma(gamma)
    if not (sigma >= 0):
        raise CertaintyError(f"sigma must be >= 0, got {sigma}")
    return -m + g * sigma * sigma / 2.0


def oce(family: UtilityFamily, gamma, dist: EmpiricalDistribution, c_bounds=None,
        tol: float = 1e-10) -> float:
    """Optimized certainty equivalent sup_c { c + E[U(gamma (X - c))] / gamma }.

    Maximised by golden section on ``c_bounds`` (default: the support
    widened by 10/gamma on both sides).  If the objective at either bound
    is as good as at the interior maximiser the problem is flat or
    divergent in that direction and ``CertaintyError`` is raised.
    """
    g = as_gamma(gamma)
    d = dist.support()
    x, p = d.outcomes, d.probabilities
    if c_bounds is None:
        c_bounds = (x[0] - 10.0 / g, x[-1] + 10.0 / g)
    lo, hi = map(float, c_bounds)
    if not lo < hi:
        raise CertaintyError(f"empty search interval {c_bounds}")

    def objective(c):
        with np.errstate(over="ignore"):
            return c + math.fsum((p * family.u(g * (x - c))).tolist()) / g

    c_star, best = golden_max(objective, lo, hi, tol=tol)
    slack = 1e-12 * max(1.0, abs(best))
    edge = max(objective(lo), objective(hi))
    if c_star - lo <= tol or hi - c_star <= tol or edge >= best - slack:
        raise CertaintyError(f"non-coercive objective: maximiser not interior to [{lo}, {hi}] "
                             f"for {family.spec()}")
    return best


def cash_additive_hull(family: UtilityFamily, gamma, dist: EmpiricalDistribution,
                       tol: float = 1e-12) -> float:
    """Smallest cash amount m with mu_gamma(X + m) <= 0.

    ``m = -min X`` is always acceptable and ``m < -E[X]`` never is for a
    concave utility, so the root lies in ``[-E[X], -min X]``; the bracket is
    widened geometrically if rounding puts it on the wrong side.
    """
    g = as_gamma(gamma)
    if not family.bounded_above:
        raise CertaintyError(f"cash-additive hull needs a utility bounded above, got {family.spec()}")
    mean, _, low = moments(dist)
    acceptable = lambda m: ce(family, g, shift(dist, m)) <= 0.0
    hi, lo = -low, -mean
    span = max(1.0, hi - lo)
    try:
        if not acceptable(hi):
            hi, _ = expand_bracket(acceptable, hi, span)
        if acceptable(lo):
            lo, _ = expand_bracket(lambda m: not acceptable(m), lo, -span)
    except BracketError as exc:
        raise CertaintyError(f"cash-additive hull: bracket expansion failed ({exc})") from None
    if lo >= hi:
        return hi
    lo, hi, _ = bisect_predicate(lambda m: not acceptable(m), lo, hi, tol, rel=False)
    return hi


def mv_approx(gamma, dist: EmpiricalDistribution) -> float:
    """Mean-variance proxy of the entropic measure: -E[X] + gamma Var[X] / 2."""
    g = as_gamma(gamma)
    mean, var, _ = moments(dist)
    return -mean + g * var / 2.0
