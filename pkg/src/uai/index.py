"""Utility-based acceptability index alpha(X) = sup{gamma > 0 : mu_gamma(X) <= 0}."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ._roots import bisect_predicate
from .certainty import ce
from .sample import EmpiricalDistribution
from .utility import UtilityFamily, certified_regular

__all__ = ["IndexValue", "IndexDomainError", "acceptability_index", "index_grid_oracle", "index_order_key"]

ZERO, FINITE, INFINITE = "zero", "finite", "infinite"


class IndexDomainError(ValueError):
    """Raised for families the index cannot be built from."""


@dataclass(frozen=True)
class IndexValue:
    kind: str
    value: Optional[float] = None
    bracket: Optional[Tuple[float, float]] = None
    evaluations: int = 0
    diagnostic: str = ""

    def __post_init__(self):
        if self.kind not in (ZERO, FINITE, INFINITE):
            raise ValueError(f"unknown index kind {self.kind!r}")
        if self.kind == INFINITE and self.diagnostic not in ("nonneg_position", "cap_exceeded", "grid_exhausted"):
            raise ValueError(f"infinite index with diagnostic {self.diagnostic!r}")

    def as_float(self) -> float:
        if self.kind == INFINITE:
            return math.inf
        if self.kind == ZERO:
            return 0.0
        return float(self.value)

    def __float__(self):
        return self.as_float()


def index_order_key(v: IndexValue):
    """Total order zero < finite(v) < infinite."""
    if v.kind == FINITE:
        return (1, float(v.value))
    return (0, 0.0) if v.kind == ZERO else (2, 0.0)


def _check_family(family: UtilityFamily):
    if not family.bounded_above:
        raise IndexDomainError(f"{family.spec()} is unbounded above; the index needs a bounded utility")
    if not certified_regular(family):
        raise IndexDomainError(f"{family.spec()} is not scale aversion regular on the audit grid")


def acceptability_index(family: UtilityFamily, dist: EmpiricalDistribution, gamma_min: float = 1e-8,
                        gamma_cap: float = 1e8, tol_rel: float = 1e-8) -> IndexValue:
    """Largest risk aversion at which ``dist`` is still acceptable.

    Sign-definite cases are decided without any evaluation of mu:
    a non-negative position is infinitely acceptable and a position with
    non-positive mean (and some loss) has index zero.  Otherwise the root
    of the non-decreasing map gamma -> mu_gamma is bracketed by factors of
    10 from ``gamma_min`` and bisected until the bracket is narrower than
    ``tol_rel`` times its upper end.  Ties resolve toward the acceptable
    side, matching the supremum.
    """
    _check_family(family)
    d = dist.support()
    if d.outcomes[0] >= 0:
        return IndexValue(INFINITE, diagnostic="nonneg_position")
    if d.mean <= 0:
        return IndexValue(ZERO, diagnostic="expectation_negative")

    n = 0

    def ok(g):
        nonlocal n
        n += 1
        return ce(family, g, d) <= 0.0

    if ok(gamma_cap):
        return IndexValue(INFINITE, bracket=(gamma_cap, math.inf), evaluations=n, diagnostic="cap_exceeded")
    lo, hi = 0.0, gamma_min
    while ok(hi):
        lo, hi = hi, hi * 10.0
        if hi >= gamma_cap:
            hi = gamma_cap
            break
    lo, hi, k = bisect_predicate(ok, lo, hi, tol_rel, rel=True)
    n += k
    return IndexValue(FINITE, value=0.5 * (lo + hi), bracket=(lo, hi), evaluations=n, diagnostic="root_found")


def index_grid_oracle(family: UtilityFamily, dist: EmpiricalDistribution, gamma_grid) -> IndexValue:
    """Brute-force scan: the largest grid gamma with mu_gamma <= 0.

    Meant as an independent check of :func:`acceptability_index`.  A
    non-negative position is reported infinite; if every grid point is
    acceptable for a position with losses, the result is infinite with
    diagnostic ``grid_exhausted``.
    """
    gammas = np.asarray(gamma_grid, dtype=float)
    if gammas.size == 0 or np.any(gammas <= 0) or np.any(np.diff(gammas) <= 0):
        raise ValueError("gamma grid must be positive and strictly ascending")
    d = dist.support()
    mu = np.array([ce(family, g, d) for g in gammas])
    good = np.flatnonzero(mu <= 0.0)
    if good.size == gammas.size:
        diag = "nonneg_position" if d.outcomes[0] >= 0 else "grid_exhausted"
        return IndexValue(INFINITE, bracket=(float(gammas[-1]), math.inf), evaluations=gammas.size, diagnostic=diag)
    if good.size == 0:
        return IndexValue(ZERO, bracket=(0.0, float(gammas[0])), evaluations=gammas.size, diagnostic="none_acceptable")
    k = int(good[-1])
    return IndexValue(FINITE, value=float(gammas[k]), bracket=(float(gammas[k]), float(gammas[k + 1])),
                      evaluations=gammas.size, diagnostic="grid_scan")
