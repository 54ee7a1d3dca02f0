"""Utility families, their scaled versions and Arrow-Pratt risk aversion.

Every family is a frozen dataclass exposing vectorised ``u``, ``du`` and
``d2u`` (hand-coded derivatives), a scalar ``inverse``, and ``core`` which
returns ``U^{-1}(E[U(z)])`` for a finite law over the already scaled
outcomes ``z``.  ``core`` is where families with an exponential tail
switch to log-domain arithmetic.

Module level functions (``eval_u``, ``eval_scaled``, ``invert_u``,
``arrow_pratt``, ``convex_conjugate``, ``check_scale_aversion_regularity``)
are the public surface; they validate inputs and work with plain floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import ClassVar, Optional

import numpy as np
from scipy.special import logsumexp

from ._roots import BracketError, expand_bracket, solve_increasing

__all__ = [
    "UtilityError",
    "UtilityFamily",
    "Exponential",
    "PowerLike",
    "ModifiedExponential",
    "IteratedExponential",
    "Linear",
    "AffineWrapped",
    "RiskAversion",
    "RegularityReport",
    "parse_utility",
    "eval_u",
    "eval_scaled",
    "invert_u",
    "arrow_pratt",
    "convex_conjugate",
    "check_scale_aversion_regularity",
    "DEFAULT_GAMMA_GRID",
    "DEFAULT_X_GRID",
]

INV_RTOL = 1e-12


class UtilityError(ValueError):
    """Domain or evaluation error raised by utility operations."""


def _fsum_dot(p, v):
    return math.fsum((np.asarray(p) * np.asarray(v)).tolist())


class UtilityFamily:
    """Base class. Subclasses are frozen dataclasses."""

    family_id: ClassVar[str] = ""
    #: analytic supremum U(+inf)
    sup: ClassVar[float] = 0.0
    bounded_above: ClassVar[bool] = True
    #: scale aversion regularity established analytically for the family
    shipped_regular: ClassVar[bool] = True
    #: lim_{x -> -inf} U'(x)
    slope_left: ClassVar[float] = math.inf

    def u(self, x):
        raise NotImplementedError

    def du(self, x):
        raise NotImplementedError

    def d2u(self, x):
        raise NotImplementedError

    def risk_aversion(self, z):
        """Unscaled Arrow-Pratt function -U''(z)/U'(z)."""
        z = np.asarray(z, dtype=float)
        d1 = self.du(z)
        if np.any(d1 <= 0):
            raise UtilityError(f"U' underflows to 0 for {self.spec()} near z={z!r}")
        return -self.d2u(z) / d1

    def inverse(self, y: float) -> float:
        raise NotImplementedError

    def core(self, z, p) -> float:
        """U^{-1}(E[U(z)]) for outcomes ``z`` with weights ``p``."""
        eu = _fsum_dot(p, self.u(z))
        if eu == -math.inf:
            return -math.inf
        return self.inverse(eu)

    def spec(self) -> str:
        return self.family_id

    def __str__(self):
        return self.spec()

    # shared numeric inverse on a monotone branch
    def _solve(self, y, x0=0.0):
        f = lambda x: float(self.u(x))
        df = lambda x: float(self.du(x))
        if f(x0) >= y:
            lo, hi = expand_bracket(lambda x: f(x) <= y, x0, -1.0)
            hi = x0 if hi is None else hi
        else:
            hi, lo = expand_bracket(lambda x: f(x) >= y, x0, 1.0)
            lo = x0 if lo is None else lo
        return solve_increasing(f, df, y, lo, hi, rtol=INV_RTOL)


@dataclass(frozen=True)
class Exponential(UtilityFamily):
    """U(x) = -exp(-x)."""

    family_id: ClassVar[str] = "exponential"
    sup: ClassVar[float] = 0.0

    def u(self, x):
        return -np.exp(-np.asarray(x, dtype=float))

    def du(self, x):
        return np.exp(-np.asarray(x, dtype=float))

    def d2u(self, x):
        return -np.exp(-np.asarray(x, dtype=float))

    def risk_aversion(self, z):
        return np.ones_like(np.asarray(z, dtype=float))

    def inverse(self, y):
        return -math.log(-y)

    def core(self, z, p):
        return -float(logsumexp(-np.asarray(z, dtype=float), b=p))

    def spec(self):
        return "exp"


@dataclass(frozen=True)
class PowerLike(UtilityFamily):
    """C^2 power-type utility: negative power on x >= 0, polynomial on x < 0."""

    alpha: float = 1.0
    beta: float = 2.0
    family_id: ClassVar[str] = "power_like"
    sup: ClassVar[float] = 0.0

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise UtilityError(f"power_like needs alpha > 0, got {self.alpha}")
        if not (self.beta >= 2 and math.isfinite(self.beta)):
            raise UtilityError(f"power_like needs beta >= 2, got {self.beta}")

    @property
    def _k(self):
        a, b = self.alpha, self.beta
        return (b - a - 2.0) / ((a + 1.0) * (b - 1.0))

    @property
    def _c(self):
        a, b = self.alpha, self.beta
        return 1.0 / (b * (b - 1.0)) - 1.0 / (a * (a + 1.0))

    def _split(self, x):
        x = np.asarray(x, dtype=float)
        pos = x >= 0
        return x, pos, np.where(pos, x, 0.0), np.where(pos, 0.0, x)

    def u(self, x):
        a, b = self.alpha, self.beta
        x, pos, xp, xn = self._split(x)
        up = -(1.0 + xp) ** (-a) / (a * (a + 1.0))
        un = -(1.0 - xn) ** b / (b * (b - 1.0)) + self._k * xn + self._c
        return np.where(pos, up, un)

    def du(self, x):
        a, b = self.alpha, self.beta
        x, pos, xp, xn = self._split(x)
        return np.where(pos, (1.0 + xp) ** (-a - 1.0) / (a + 1.0),
                        (1.0 - xn) ** (b - 1.0) / (b - 1.0) + self._k)

    def d2u(self, x):
        a, b = self.alpha, self.beta
        x, pos, xp, xn = self._split(x)
        return np.where(pos, -(1.0 + xp) ** (-a - 2.0), -(1.0 - xn) ** (b - 2.0))

    def inverse(self, y):
        a = self.alpha
        u0 = -1.0 / (a * (a + 1.0))
        if y >= u0:
            return (-y * a * (a + 1.0)) ** (-1.0 / a) - 1.0
        return self._solve(y, 0.0)

    def spec(self):
        return f"powerlike:alpha={self.alpha:g},beta={self.beta:g}"


@dataclass(frozen=True)
class ModifiedExponential(UtilityFamily):
    """-exp(-x) for x >= 0 and x - 1 below; only C^1 at the origin."""

    family_id: ClassVar[str] = "modified_exponential"
    sup: ClassVar[float] = 0.0
    slope_left: ClassVar[float] = 1.0

    def u(self, x):
        x = np.asarray(x, dtype=float)
        pos = x >= 0
        return np.where(pos, -np.exp(-np.where(pos, x, 0.0)), x - 1.0)

    def du(self, x):
        x = np.asarray(x, dtype=float)
        pos = x >= 0
        return np.where(pos, np.exp(-np.where(pos, x, 0.0)), 1.0)

    def d2u(self, x):
        # right branch at exactly 0
        x = np.asarray(x, dtype=float)
        pos = x >= 0
        return np.where(pos, -np.exp(-np.where(pos, x, 0.0)), 0.0)

    def risk_aversion(self, z):
        return np.where(np.asarray(z, dtype=float) >= 0, 1.0, 0.0)

    def inverse(self, y):
        if y >= -1.0:
            return -math.log(-y)
        return y + 1.0

    def core(self, z, p):
        z = np.asarray(z, dtype=float)
        p = np.asarray(p, dtype=float)
        if np.all(z[p > 0] >= 0):
            # E[U] may underflow to 0 in linear arithmetic
            return -float(logsumexp(-z, b=p))
        return super().core(z, p)

    def spec(self):
        return "modexp"


# above this e^{-z} is computed in the doubly-logarithmic domain
_ITEREXP_LOGLOG = 700.0


@dataclass(frozen=True)
class IteratedExponential(UtilityFamily):
    """U(x) = -exp(exp(-x))."""

    family_id: ClassVar[str] = "iterated_exponential"
    sup: ClassVar[float] = -1.0
    shipped_regular: ClassVar[bool] = False

    def u(self, x):
        with np.errstate(over="ignore"):
            return -np.exp(np.exp(-np.asarray(x, dtype=float)))

    def du(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return np.exp(np.exp(-x) - x)

    def d2u(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            return -np.exp(np.exp(-x) - x) * (np.exp(-x) + 1.0)

    def risk_aversion(self, z):
        with np.errstate(over="ignore"):
            return np.exp(-np.asarray(z, dtype=float)) + 1.0

    def inverse(self, y):
        if y == -math.inf:
            return -math.inf
        return -math.log(math.log(-y))

    def core(self, z, p):
        z = np.asarray(z, dtype=float)
        p = np.asarray(p, dtype=float)
        keep = p > 0
        w, p = -z[keep], p[keep]
        wmax = float(w.max())
        if wmax > _ITEREXP_LOGLOG:
            return -self._loglog_level(w, p, wmax)
        h = np.exp(w)
        if h.max() < 1.0:
            return -self._small_h_loglevel(w, h, p)
        return -math.log(float(logsumexp(h, b=p)))

    @staticmethod
    def _small_h_loglevel(w, h, p):
        """log log1p(S), S = E[expm1(h)], for h = e^w < 1, robust to h underflowing.

        log S = logsumexp(w + log(expm1(h)/h)) and log log1p(S) = log S + log(log1p(S)/S).
        """
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(h > 0, np.expm1(h) / h, 1.0)
        log_s = float(logsumexp(w + np.log(ratio), b=p))
        s = math.exp(log_s)
        return log_s + (math.log(math.log1p(s) / s) if s > 0 else 0.0)

    @staticmethod
    def _loglog_level(w, p, wmax):
        """log log E[exp(e^w)] when e^wmax overflows.

        With h = e^w, log E[exp(h)] = h_max + S where
        S = log sum p_i exp(h_i - h_max) and h_i - h_max = e^wmax expm1(w_i - wmax).
        """
        d = w - wmax
        with np.errstate(over="ignore", divide="ignore"):
            gap = np.exp(wmax + np.log(-np.expm1(d)))  # h_max - h_i, inf when huge
            terms = np.where(d == 0.0, p, p * np.exp(-gap))
        S = math.log(_fsum_dot(terms, np.ones_like(terms)))
        return wmax + math.log1p(S * math.exp(-wmax))

    def spec(self):
        return "iterexp"


@dataclass(frozen=True)
class Linear(UtilityFamily):
    """U(x) = x, the scale-invariant reference; unbounded above."""

    family_id: ClassVar[str] = "linear"
    sup: ClassVar[float] = math.inf
    bounded_above: ClassVar[bool] = False
    slope_left: ClassVar[float] = 1.0

    def u(self, x):
        return np.asarray(x, dtype=float) * 1.0

    def du(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    def d2u(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def risk_aversion(self, z):
        return np.zeros_like(np.asarray(z, dtype=float))

    def inverse(self, y):
        return float(y)

    def core(self, z, p):
        return _fsum_dot(p, z)

    def spec(self):
        return "linear"


@dataclass(frozen=True)
class AffineWrapped(UtilityFamily):
    """a * F(x) + b for a > 0; same preferences and risk aversion as F."""

    a: float = 1.0
    b: float = 0.0
    inner: UtilityFamily = field(default_factory=Exponential)
    family_id: ClassVar[str] = "affine_wrapped"

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise UtilityError(f"affine wrapper needs a > 0, got {self.a}")
        if not math.isfinite(self.b):
            raise UtilityError(f"affine wrapper needs finite b, got {self.b}")

    # instance-level overrides of the class attributes
    @property
    def sup(self):
        return self.a * self.inner.sup + self.b

    @property
    def bounded_above(self):
        return self.inner.bounded_above

    @property
    def shipped_regular(self):
        return self.inner.shipped_regular

    @property
    def slope_left(self):
        return self.a * self.inner.slope_left

    def u(self, x):
        return self.a * self.inner.u(x) + self.b

    def du(self, x):
        return self.a * self.inner.du(x)

    def d2u(self, x):
        return self.a * self.inner.d2u(x)

    def risk_aversion(self, z):
        return self.inner.risk_aversion(z)

    def inverse(self, y):
        return self.inner.inverse((y - self.b) / self.a)

    def core(self, z, p):
        # U^{-1}(E[aF+b]) = F^{-1}(E[F]) exactly
        return self.inner.core(z, p)

    def spec(self):
        return f"affine:a={self.a:g},b={self.b:g},inner={self.inner.spec()}"


_ALIASES = {
    "exp": "exponential",
    "exponential": "exponential",
    "entropic": "exponential",
    "powerlike": "power_like",
    "power_like": "power_like",
    "modexp": "modified_exponential",
    "modified_exponential": "modified_exponential",
    "iterexp": "iterated_exponential",
    "iterated_exponential": "iterated_exponential",
    "linear": "linear",
    "affine": "affine_wrapped",
    "affine_wrapped": "affine_wrapped",
}


def parse_params(text: str) -> dict:
    """Parse ``k=v,k=v`` into a dict of strings."""
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise UtilityError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_utility(text: str) -> UtilityFamily:
    """Build a family from a CLI id such as ``powerlike:alpha=1,beta=2``.

    For ``affine`` the ``inner=`` key must come last; everything after it
    is parsed recursively, e.g. ``affine:a=2,b=1,inner=powerlike:alpha=1,beta=3``.
    """
    name, _, rest = text.strip().partition(":")
    key = _ALIASES.get(name.strip().lower())
    if key is None:
        raise UtilityError(f"unknown utility {name!r}")
    if key == "affine_wrapped":
        head, sep, inner = rest.partition("inner=")
        params = parse_params(head.rstrip(","))
        inner_family = parse_utility(inner) if sep else Exponential()
        unknown = set(params) - {"a", "b"}
        if unknown:
            raise UtilityError(f"unknown affine parameters {sorted(unknown)}")
        return AffineWrapped(float(params.get("a", 1.0)), float(params.get("b", 0.0)), inner_family)
    params = parse_params(rest)
    if key == "power_like":
        unknown = set(params) - {"alpha", "beta"}
        if unknown:
            raise UtilityError(f"unknown power_like parameters {sorted(unknown)}")
        return PowerLike(float(params.get("alpha", 1.0)), float(params.get("beta", 2.0)))
    if params:
        raise UtilityError(f"{key} takes no parameters")
    return {
        "exponential": Exponential,
        "modified_exponential": ModifiedExponential,
        "iterated_exponential": IteratedExponential,
        "linear": Linear,
    }[key]()


@dataclass(frozen=True)
class RiskAversion:
    """A strictly positive, finite risk-aversion level."""

    gamma: float

    def __post_init__(self):
        g = self.gamma
        if isinstance(g, RiskAversion):
            object.__setattr__(self, "gamma", g.gamma)
            return
        g = float(g)
        if not (math.isfinite(g) and g > 0):
            raise UtilityError(f"risk aversion must be finite and > 0, got {self.gamma!r}")
        object.__setattr__(self, "gamma", g)

    def __float__(self):
        return self.gamma


def as_gamma(gamma) -> float:
    return RiskAversion(gamma).gamma


def _check_x(x):
    x = float(x)
    if not math.isfinite(x):
        raise UtilityError(f"utility argument must be finite, got {x}")
    return x


def eval_u(family: UtilityFamily, x: float) -> float:
    return float(family.u(_check_x(x)))


def eval_scaled(family: UtilityFamily, gamma, x: float) -> float:
    """U_gamma(x) = U(gamma * x)."""
    return float(family.u(as_gamma(gamma) * _check_x(x)))


def invert_u(family: UtilityFamily, y: float) -> float:
    """Inverse utility with the convention U^{-1}(-inf) = -inf."""
    y = float(y)
    if y == -math.inf:
        return -math.inf
    if math.isnan(y) or y >= family.sup:
        raise UtilityError(f"value above utility supremum: {y} >= {family.sup} for {family.spec()}")
    return float(family.inverse(y))


def arrow_pratt(family: UtilityFamily, gamma, x: float) -> float:
    """A_gamma(x) = -gamma U''(gamma x) / U'(gamma x)."""
    g = as_gamma(gamma)
    return g * float(family.risk_aversion(g * _check_x(x)))


def convex_conjugate(family: UtilityFamily, y: float) -> float:
    """sup_x [U(x) - x y] for y > 0, +inf when the supremum diverges.

    The maximiser solves U'(x) = y; U' is non-increasing, so the root is
    bracketed by walking left until U' >= y and right until U' <= y.
    """
    y = float(y)
    if not (y > 0):
        raise UtilityError(f"convex conjugate needs y > 0, got {y}")
    if y > family.slope_left:
        return math.inf
    d1 = lambda x: float(family.du(x))
    try:
        lo, _ = expand_bracket(lambda x: d1(x) >= y, 0.0, -1.0)
        hi, _ = expand_bracket(lambda x: d1(x) <= y, 0.0, 1.0)
    except BracketError:
        # U' never reaches y on the right: the objective keeps increasing
        return math.inf
    # -U' is increasing
    x = solve_increasing(lambda t: -d1(t), lambda t: -float(family.d2u(t)), -y, lo, hi, rtol=1e-14)
    return float(family.u(x)) - x * y


DEFAULT_GAMMA_GRID = tuple(np.logspace(-2.0, 2.0, 64).tolist())
DEFAULT_X_GRID = tuple(np.linspace(-20.0, 20.0, 401).tolist())


@dataclass(frozen=True)
class RegularityReport:
    """Outcome of a grid audit of gamma -> A_gamma(x)."""

    verdict: str  # "regular_on_grid" | "violated"
    witness: Optional[tuple]  # (gamma1, gamma2, x, A1, A2)
    gamma_grid: tuple
    x_grid: tuple
    tol: float
    n_nonfinite: int = 0
    max_drop: float = 0.0

    def __post_init__(self):
        if (self.witness is None) != (self.verdict == "regular_on_grid"):
            raise ValueError("witness must be present exactly when the verdict is 'violated'")


def check_scale_aversion_regularity(family: UtilityFamily, gamma_grid=None, x_grid=None,
                                    tol: float = 1e-9) -> RegularityReport:
    """Audit gamma -> A_gamma(x) for monotonicity on a (gamma, x) grid.

    A violation is a pair gamma_i < gamma_j and a point x with
    A_{gamma_i}(x) > A_{gamma_j}(x) + tol.  The first witness is reported in
    gamma_j order, then x order, with gamma_i the running argmax below
    gamma_j.  ``max_drop`` is the largest such excess over the whole grid
    (0 if none), which is useful when the verdict is regular.
    """
    gammas = np.asarray(DEFAULT_GAMMA_GRID if gamma_grid is None else gamma_grid, dtype=float)
    xs = np.asarray(DEFAULT_X_GRID if x_grid is None else x_grid, dtype=float)
    if gammas.size == 0 or xs.size == 0:
        raise UtilityError("regularity grids must be non-empty")
    if np.any(gammas <= 0) or np.any(np.diff(gammas) < 0):
        raise UtilityError("gamma grid must be positive and ascending")
    with np.errstate(over="ignore", invalid="ignore"):
        A = gammas[:, None] * family.risk_aversion(gammas[:, None] * xs[None, :])
    A = np.asarray(A, dtype=float)
    nonfinite = int(np.count_nonzero(~np.isfinite(A)))
    run_max = np.maximum.accumulate(A, axis=0)
    run_arg = np.zeros(A.shape, dtype=int)
    for i in range(1, A.shape[0]):
        better = A[i] > run_max[i - 1]
        run_arg[i] = np.where(better, i, run_arg[i - 1])
    with np.errstate(invalid="ignore"):
        excess = run_max[:-1] - A[1:]
        # inf - inf is nan: equal infinities are not a drop
        excess = np.where(np.isnan(excess), 0.0, excess)
    max_drop = float(max(0.0, excess.max())) if excess.size else 0.0
    bad = excess > tol
    if not bad.any():
        return RegularityReport("regular_on_grid", None, tuple(gammas.tolist()), tuple(xs.tolist()),
                                tol, nonfinite, max_drop)
    j, k = map(int, np.argwhere(bad)[0])
    i = int(run_arg[j, k])
    witness = (float(gammas[i]), float(gammas[j + 1]), float(xs[k]), float(A[i, k]), float(A[j + 1, k]))
    return RegularityReport("violated", witness, tuple(gammas.tolist()), tuple(xs.tolist()),
                            tol, nonfinite, max_drop)


@lru_cache(maxsize=64)
def certified_regular(family: UtilityFamily) -> bool:
    """Shipped-regular families pass directly; others must pass the default grid audit."""
    if family.shipped_regular:
        return True
    return check_scale_aversion_regularity(family).verdict == "regular_on_grid"
