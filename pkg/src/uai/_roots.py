"""Small scalar solvers shared by the utility, certainty and index modules.

All of them assume monotone or unimodal objectives; none of them is a
general-purpose root finder.
"""

import math

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class BracketError(ArithmeticError):
    """Raised when a bracket cannot be established."""


def expand_bracket(pred, start, step, max_iter=2000):
    """Walk ``start, start+step, start+2*step, start+4*step, ...`` until ``pred`` holds.

    Returns the first point where ``pred`` is true and the last point
    where it was false (or ``None`` when it held immediately).
    """
    prev = None
    x = start
    if pred(x):
        return x, prev
    width = step
    for _ in range(max_iter):
        prev = x
        x = start + width
        if not math.isfinite(x):
            break
        if pred(x):
            return x, prev
        width *= 2.0
    raise BracketError(f"no bracket found from {start!r} with step {step!r}")


def solve_increasing(f, df, y, lo, hi, rtol=1e-12, max_iter=400):
    """Solve ``f(x) = y`` for increasing ``f`` on ``[lo, hi]``.

    Newton steps are taken while they stay inside the current bracket,
    bisection otherwise.  Stops once ``|f(x) - y| <= rtol * max(1, |y|)``
    or the bracket collapses to adjacent floats.
    """
    flo, fhi = f(lo) - y, f(hi) - y
    if flo > 0 or fhi < 0:
        raise BracketError(f"[{lo}, {hi}] does not bracket the level {y}")
    target = rtol * max(1.0, abs(y))
    if abs(flo) <= target:
        return lo
    if abs(fhi) <= target:
        return hi
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        fx = f(x) - y
        if abs(fx) <= target:
            return x
        if fx < 0:
            lo = x
        else:
            hi = x
        d = df(x)
        nx = x - fx / d if d > 0 and math.isfinite(d) else math.nan
        if not (lo < nx < hi):
            nx = 0.5 * (lo + hi)
        if nx == x or nx in (lo, hi):
            # bracket exhausted at float resolution
            return x
        x = nx
    return x


def bisect_predicate(pred, lo, hi, tol, rel=True, max_iter=400):
    """Shrink ``[lo, hi]`` where ``pred(lo)`` holds and ``pred(hi)`` fails.

    Returns ``(lo, hi, n_evals)``.  The width criterion is ``tol * hi`` when
    ``rel`` is set, ``tol`` otherwise.
    """
    n = 0
    for _ in range(max_iter):
        width = tol * abs(hi) if rel else tol
        if hi - lo <= width:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        n += 1
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi, n


def golden_max(f, a, b, tol=1e-10, max_iter=500):
    """Golden-section search for the maximiser of a unimodal ``f`` on ``[a, b]``.

    Ties move the bracket to the left, so a flat objective drifts to ``a``.
    """
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)
