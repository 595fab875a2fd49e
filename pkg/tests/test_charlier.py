import math

import gmpy2
import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qosc import LatticePoint, QContext
from qosc.charlier import (
    charlier_classical,
    charlier_explicit,
    charlier_explicit_scaled,
    charlier_explicit_terms,
    charlier_recurrence,
    charlier_recurrence_table,
    diff_lowering_residual,
    diff_raising_residual,
    lattice_x,
    log_weight_rho,
    pearson_residual,
    sigma,
    weight_rho,
    weight_rho_product_form,
    weight_rho_scaled,
)
from qosc.exceptions import QDomainError

# mpmath oracles at q = 0.5, mu = 0.3 (30 digits), frozen
C3_AT_S4 = -990.6666666666668
C1_AT_S1 = -0.6666666666666667
RHO_RATIO_1_0 = 0.15 / 0.35


def test_context_validation():
    for kwargs in ({"q": 1.5}, {"q": 0.0}, {"mu": 0.0}, {"mu": 1.0}, {"s_max": 0}, {"tol": -1.0}):
        with pytest.raises(QDomainError):
            QContext(**kwargs)
    ctx = QContext()
    assert ctx.with_(s_max=10).s_max == 10 and ctx.size == 61
    assert hash(ctx) == hash(QContext())


def test_lattice_point():
    pt = LatticePoint.at(3, 0.5)
    assert pt.x == 8.0 and lattice_x(0, 0.5) == 1.0


def test_low_degrees(ctx):
    assert charlier_explicit(0, 5, ctx) == 1.0
    assert charlier_explicit(1, 0, ctx) == 1.0
    assert charlier_explicit(1, 1, ctx) == pytest.approx(C1_AT_S1, rel=1e-15)
    assert charlier_recurrence(1, 2.0, ctx) == pytest.approx(C1_AT_S1, rel=1e-15)


def test_frozen_c3(ctx):
    assert charlier_explicit(3, 4, ctx) == pytest.approx(C3_AT_S4, rel=1e-13)
    assert charlier_recurrence(3, LatticePoint.at(4, 0.5), ctx) == pytest.approx(C3_AT_S4, rel=1e-13)


def test_term_count(ctx):
    for n in range(8):
        for s in range(8):
            assert len(charlier_explicit_terms(n, s, ctx)) == min(n, s) + 1


@settings(max_examples=40, deadline=None)
@given(q=st.floats(0.2, 0.8), mu=st.floats(0.1, 0.9), n=st.integers(0, 30), s=st.integers(0, 30))
def test_explicit_matches_recurrence(q, mu, n, s):
    ctx = QContext(q, mu, 30)
    mant, exp = charlier_explicit_scaled(n, s, ctx)
    ref = charlier_recurrence_table(n, LatticePoint.at(s, q), ctx)[n]
    assert float(abs(gmpy2.mul_2exp(gmpy2.mpfr(mant), exp) - ref) / abs(ref)) < 1e-10


def test_scaled_matches_plain(ctx):
    for n in range(12):
        for s in range(12):
            mant, exp = charlier_explicit_scaled(n, s, ctx)
            assert math.ldexp(mant, exp) == pytest.approx(charlier_explicit(n, s, ctx), rel=1e-13, abs=1e-300)


def test_recurrence_against_mpmath():
    ctx = QContext(0.7, 0.2, 40)
    mpmath.mp.dps = 60
    q, mu, x = mpmath.mpf(0.7), mpmath.mpf(0.2), mpmath.mpf(0.7) ** -3
    c = [mpmath.mpf(1), (mu + q - q * x) / mu]
    for n in range(1, 25):
        c.append(q ** (n + 1) / mu * (((mu + q) * q ** (-n - 1) - x) * c[n] - (1 - q**n) * q**-n * c[n - 1]))
    mpmath.mp.dps = 15
    got = charlier_recurrence_table(25, LatticePoint.at(3, 0.7), ctx)
    for k in (5, 15, 25):
        assert float(got[k]) == pytest.approx(float(c[k]), rel=1e-12)


def test_weight(ctx):
    assert weight_rho(0, ctx) == pytest.approx(0.5101178266339876, rel=1e-15)
    assert weight_rho(1, ctx) / weight_rho(0, ctx) == pytest.approx(RHO_RATIO_1_0, rel=1e-14)
    for s in range(ctx.size):
        assert weight_rho_scaled(s, ctx)[0] > 0
        a, b = weight_rho(s, ctx), weight_rho_product_form(s, ctx)
        assert b == pytest.approx(a, rel=1e-12)
    mass = math.fsum(weight_rho(s, ctx) * 2.0**s for s in range(ctx.size))
    assert mass == pytest.approx(1.0, abs=1e-14)


def test_weight_deep_tail(ctx):
    # rho underflows; the log stays finite and matches the recursion ratio
    big = ctx.with_(s_max=200)
    assert weight_rho(200, big) == 0.0
    step = log_weight_rho(200, big) - log_weight_rho(199, big)
    q, mu = 0.5, 0.3
    expected = math.log(mu * q ** (2 * 199 + 1) / ((1 - q**200) * (1 - mu * q**199)))
    assert step == pytest.approx(expected, rel=1e-12)


def test_pearson(ctx):
    assert sigma(0, ctx) == 0.0
    for s in range(ctx.size):
        assert abs(pearson_residual(s, ctx)) < 1e-12


def test_classical_limit_decreasing():
    n, s, mu = 3, 4, 1.5
    ref = charlier_classical(n, s, mu)
    errors = [abs(charlier_explicit(n, s, QContext(q, (1 - q) * mu, 4)) - ref) for q in (0.9, 0.99, 0.999)]
    assert errors[0] > errors[1] > errors[2]


def test_classical_values():
    assert charlier_classical(0, 3, 2.0) == 1.0
    assert charlier_classical(1, 3, 2.0) == pytest.approx(1 - 3 / 2.0)


@pytest.mark.parametrize("n", [1, 4, 12])
def test_difference_formulas(ctx, n):
    for s in range(0, 25):
        assert diff_lowering_residual(n, s, ctx) < 1e-12
        assert diff_raising_residual(n, s, ctx) < 1e-12


def test_difference_formula_domain(ctx):
    with pytest.raises(QDomainError):
        diff_lowering_residual(0, 1, ctx)
    with pytest.raises(QDomainError):
        diff_lowering_residual(1, ctx.s_max, ctx)


def test_overflow_is_reported(ctx):
    with pytest.raises(OverflowError):
        charlier_explicit(25, 60, ctx)
