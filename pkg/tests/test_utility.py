import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from uai.utility import (
    AffineWrapped,
    Exponential,
    IteratedExponential,
    Linear,
    ModifiedExponential,
    PowerLike,
    RiskAversion,
    UtilityError,
    UtilityFamily,
    arrow_pratt,
    certified_regular,
    check_scale_aversion_regularity,
    convex_conjugate,
    eval_scaled,
    eval_u,
    invert_u,
    parse_utility,
)

from conftest import ALL_FAMILIES, REGULAR


@dataclass(frozen=True)
class ArctanSlope(UtilityFamily):
    """U'(z) = exp(-arctan z): risk aversion 1/(1+z^2), so gamma -> A_gamma(x) falls for gamma|x| > 1."""

    family_id: ClassVar[str] = "arctan_slope"
    sup: ClassVar[float] = math.inf
    bounded_above: ClassVar[bool] = True
    shipped_regular: ClassVar[bool] = False

    def du(self, x):
        return np.exp(-np.arctan(np.asarray(x, dtype=float)))

    def d2u(self, x):
        x = np.asarray(x, dtype=float)
        return -self.du(x) / (1.0 + x * x)

    def spec(self):
        return "arctan_slope"


# paper and hand-derived values

def test_eval_u_examples():
    assert eval_u(Exponential(), 0.0) == -1.0
    assert eval_u(PowerLike(1, 2), 0.0) == -0.5
    assert eval_u(IteratedExponential(), 0.0) == pytest.approx(-math.e, rel=1e-15)


def test_eval_scaled_examples():
    assert eval_scaled(Exponential(), 2.0, 1.0) == pytest.approx(-math.exp(-2.0), rel=1e-15)
    assert eval_scaled(Linear(), 3.0, 5.0) == 15.0
    for fam in ALL_FAMILIES:
        for x in (-2.5, 0.0, 0.7, 4.0):
            assert eval_scaled(fam, 1.0, x) == eval_u(fam, x)
            assert eval_scaled(fam, 2.5, x) == eval_u(fam, 2.5 * x)


def test_invert_u_examples():
    assert invert_u(Exponential(), -1.0) == 0.0
    assert invert_u(Exponential(), -math.e) == pytest.approx(-1.0, abs=1e-15)
    assert invert_u(PowerLike(1, 2), -0.5) == 0.0
    assert invert_u(Exponential(), -math.inf) == -math.inf


def test_invert_u_powerlike_negative_branch_matches_bisection_oracle():
    fam = PowerLike(1.0, 2.0)
    for y in (-0.6, -1.0, -3.0, -40.0):
        oracle = brentq(lambda x: float(fam.u(x)) - y, -1e3, 0.0, xtol=1e-15, rtol=1e-15)
        assert invert_u(fam, y) == pytest.approx(oracle, rel=1e-11, abs=1e-12)


@pytest.mark.parametrize("fam", [Exponential(), PowerLike(1, 2), ModifiedExponential(), IteratedExponential()])
def test_invert_above_supremum_rejected(fam):
    with pytest.raises(UtilityError, match="supremum"):
        invert_u(fam, fam.sup)
    with pytest.raises(UtilityError, match="supremum"):
        invert_u(fam, fam.sup + 1.0)


def test_non_finite_argument_rejected():
    for bad in (math.nan, math.inf, -math.inf):
        with pytest.raises(UtilityError):
            eval_u(Exponential(), bad)


@pytest.mark.parametrize("g", [0.0, -1.0, math.inf, math.nan])
def test_risk_aversion_rejects_invalid(g):
    with pytest.raises(UtilityError):
        RiskAversion(g)


def test_arrow_pratt_examples():
    for g in (0.01, 0.7, 3.0, 90.0):
        for x in (-4.0, 0.0, 2.0):
            assert arrow_pratt(Exponential(), g, x) == g
    for a in (0.5, 1.0, 2.0):
        for g in (0.3, 1.0, 2.0):
            assert arrow_pratt(PowerLike(a, 3.0), g, 1.0) == pytest.approx(g * (a + 1) / (1 + g), rel=1e-14)
    assert arrow_pratt(IteratedExponential(), 1.0, 0.0) == 2.0
    assert arrow_pratt(ModifiedExponential(), 2.0, 0.0) == 2.0
    assert arrow_pratt(ModifiedExponential(), 2.0, -1.0) == 0.0


def test_affine_wrapping_preserves_arrow_pratt_exactly():
    for inner in REGULAR:
        w = AffineWrapped(2.0, 1.0, inner)
        for g in (0.1, 1.0, 7.0):
            for x in (-3.0, -0.2, 0.0, 1.5):
                assert arrow_pratt(w, g, x) == arrow_pratt(inner, g, x)


def test_modexp_second_derivative_at_kink_uses_right_branch():
    assert float(ModifiedExponential().d2u(0.0)) == -1.0


# grid invariants

GRIDS = {
    "exponential": (-50.0, 50.0),
    "power_like": (-50.0, 50.0),
    "modified_exponential": (-50.0, 50.0),
    "linear": (-50.0, 50.0),
    # U = -exp(e^{-x}) overflows below about -6.5 and is flat to float precision above about 36
    "iterated_exponential": (-6.0, 30.0),
}


def _grid(fam, n=10_000):
    lo, hi = GRIDS[fam.family_id]
    return np.linspace(lo, hi, n)


@pytest.mark.parametrize("fam", ALL_FAMILIES, ids=lambda f: f.spec())
def test_strictly_increasing_on_grid(fam):
    u = fam.u(_grid(fam))
    assert np.all(np.diff(u) > 0)


@pytest.mark.parametrize("fam", ALL_FAMILIES, ids=lambda f: f.spec())
def test_midpoint_concave_on_grid(fam):
    x = _grid(fam)
    a, b = x[:-2], x[2:]
    mid = fam.u(0.5 * (a + b))
    chord = 0.5 * (fam.u(a) + fam.u(b))
    slack = 1e-13 * np.maximum(1.0, np.abs(chord))
    assert np.all(mid >= chord - slack)
    if fam.family_id == "linear":
        assert np.allclose(mid, chord, rtol=0, atol=1e-12)


@pytest.mark.parametrize("fam", REGULAR, ids=lambda f: f.spec())
def test_bounded_above_by_supremum(fam):
    assert fam.bounded_above
    assert np.all(fam.u(_grid(fam)) <= fam.sup)


def test_linear_flagged_unbounded():
    assert not Linear().bounded_above
    assert Linear().sup == math.inf


@given(st.floats(0.1, 5.0), st.floats(2.0, 6.0))
def test_powerlike_c2_at_origin(a, b):
    fam = PowerLike(a, b)
    h = 1e-13
    for f in (fam.u, fam.du, fam.d2u):
        assert abs(float(f(-h)) - float(f(0.0))) <= 1e-9
        assert abs(float(f(h)) - float(f(0.0))) <= 1e-9


INVERT_RANGES = {
    "exponential": (-30.0, 30.0),
    "power_like": (-50.0, 50.0),
    "modified_exponential": (-50.0, 30.0),
    "iterated_exponential": (-5.0, 10.0),
    "linear": (-50.0, 50.0),
}


@pytest.mark.parametrize("fam", ALL_FAMILIES, ids=lambda f: f.spec())
def test_invert_eval_roundtrip(fam):
    lo, hi = INVERT_RANGES[fam.family_id]
    for x in np.linspace(lo, hi, 301):
        back = invert_u(fam, eval_u(fam, float(x)))
        assert abs(back - x) <= 1e-10 * max(1.0, abs(x)), (x, back)


@pytest.mark.parametrize("fam", ALL_FAMILIES, ids=lambda f: f.spec())
def test_invert_meets_residual_contract(fam):
    lo, hi = INVERT_RANGES[fam.family_id]
    for x in np.linspace(lo, hi, 97):
        y = eval_u(fam, float(x))
        assert abs(eval_u(fam, invert_u(fam, y)) - y) <= 1e-12 * max(1.0, abs(y))


def _fd_ratio(u, z, h):
    d1 = (-u(z + 2 * h) + 8 * u(z + h) - 8 * u(z - h) + u(z - 2 * h)) / (12 * h)
    d2 = (-u(z + 2 * h) + 16 * u(z + h) - 30 * u(z) + 16 * u(z - h) - u(z - 2 * h)) / (12 * h * h)
    return -d2 / d1


def _fd_arrow_pratt(fam, g, x, h=1e-3):
    """-g U''(g x) / U'(g x) from five-point stencils on U alone.

    The step shrinks with a rough first-pass curvature so steep regions
    (iterated exponential far left) are resolved.
    """
    z = g * x
    u = lambda t: float(fam.u(t))
    rough = abs(_fd_ratio(u, z, h))
    return g * _fd_ratio(u, z, h / max(1.0, rough))


@pytest.mark.parametrize("fam", REGULAR + [AffineWrapped(3.0, -2.0, PowerLike(0.5, 3.0))], ids=lambda f: f.spec())
def test_arrow_pratt_finite_difference_audit(fam):
    for g in (0.5, 1.0, 2.0):
        for x in np.linspace(-2.5, 2.5, 21):
            if abs(g * x) < 0.05:
                continue  # kinks of modexp and the third-derivative jump of power_like
            a = arrow_pratt(fam, g, float(x))
            fd = _fd_arrow_pratt(fam, g, float(x))
            if a == 0.0:
                assert abs(fd) <= 1e-6
            else:
                assert abs(fd - a) <= 1e-6 * abs(a), (g, x, a, fd)


# regularity certifier

@pytest.mark.parametrize("fam", [Exponential(), PowerLike(1, 2), PowerLike(0.5, 3), ModifiedExponential(), Linear()],
                         ids=lambda f: f.spec())
def test_shipped_families_regular_on_default_grid(fam):
    rep = check_scale_aversion_regularity(fam)
    assert rep.verdict == "regular_on_grid"
    assert rep.witness is None


def test_powerlike_regular_on_stated_window():
    rep = check_scale_aversion_regularity(PowerLike(1, 2), np.logspace(-1, 1, 200), np.linspace(-5, 5, 1001))
    assert rep.verdict == "regular_on_grid"


def test_iterated_exponential_audit_finds_no_violation():
    # d/dgamma [gamma (e^{-gamma x} + 1)] = 1 + e^{-u}(1 - u), u = gamma x, bounded below by 1 - e^{-2}
    rep = check_scale_aversion_regularity(IteratedExponential(), np.logspace(-1, 1, 400), np.linspace(-5, 5, 2001))
    assert rep.verdict == "regular_on_grid"
    assert rep.witness is None
    assert rep.max_drop == 0.0
    u = np.linspace(-50, 50, 200_001)
    assert np.min(1 + np.exp(-u) * (1 - u)) == pytest.approx(1 - math.exp(-2), rel=1e-6)


def test_violation_reports_reevaluable_witness():
    fam = ArctanSlope()
    rep = check_scale_aversion_regularity(fam, np.logspace(-1, 1, 32), np.linspace(-3, 3, 61))
    assert rep.verdict == "violated"
    g1, g2, x, a1, a2 = rep.witness
    assert g1 < g2
    assert a1 == arrow_pratt(fam, g1, x)
    assert a2 == arrow_pratt(fam, g2, x)
    assert a1 > a2 + rep.tol
    assert not certified_regular(fam)


def test_regularity_grid_validation():
    with pytest.raises(UtilityError):
        check_scale_aversion_regularity(Exponential(), [], [0.0])
    with pytest.raises(UtilityError):
        check_scale_aversion_regularity(Exponential(), [2.0, 1.0], [0.0])


# convex conjugate

def test_convex_conjugate_examples():
    assert convex_conjugate(Exponential(), 1.0) == pytest.approx(-1.0, abs=1e-14)
    xs = np.linspace(-5, 5, 100_001)
    assert convex_conjugate(Exponential(), 1.0) == pytest.approx(np.max(-np.exp(-xs) - xs), abs=1e-9)
    assert convex_conjugate(Linear(), 1.0) == 0.0
    assert convex_conjugate(ModifiedExponential(), 2.0) == math.inf


def test_convex_conjugate_exponential_closed_form_and_small_y_limit():
    # U*(y) = y ln y - y increases to U_sup = 0 as y -> 0+ and diverges as y -> inf
    ys = [10.0 ** -k for k in range(1, 9)]
    vals = [convex_conjugate(Exponential(), y) for y in ys]
    for y, v in zip(ys, vals):
        assert v == pytest.approx(y * math.log(y) - y, rel=1e-10)
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert -1e-6 < vals[-1] < 0.0
    big = [convex_conjugate(Exponential(), 10.0 ** k) for k in range(1, 6)]
    assert all(b > a for a, b in zip(big, big[1:]))


def test_convex_conjugate_rejects_nonpositive():
    for y in (0.0, -1.0):
        with pytest.raises(UtilityError):
            convex_conjugate(Exponential(), y)


# parsing

@pytest.mark.parametrize("text", ["exp", "powerlike:alpha=1,beta=2", "powerlike:alpha=0.5,beta=3", "modexp",
                                  "iterexp", "linear", "affine:a=2,b=1,inner=exp",
                                  "affine:a=0.5,b=-1,inner=powerlike:alpha=2,beta=4"])
def test_parse_spec_roundtrip(text):
    fam = parse_utility(text)
    assert parse_utility(fam.spec()) == fam


@pytest.mark.parametrize("text", ["nope", "powerlike:alpha=-1", "powerlike:beta=1.5", "exp:a=1",
                                  "affine:a=0,b=1,inner=exp", "powerlike:alpha"])
def test_parse_rejects(text):
    with pytest.raises(ValueError):
        parse_utility(text)
