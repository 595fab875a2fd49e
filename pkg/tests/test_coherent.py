import math

import mpmath
import pytest

from qosc import QContext
from qosc.coherent import (
    CoherentParams,
    coherent_closed,
    coherent_overlap,
    coherent_series,
    generating_function_closed,
    generating_function_partial,
    normalization,
)
from qosc.exceptions import QDomainError
from qosc.oscillator import apply_annihilation, inner_product, wavefunction

WIDE = QContext(s_max=120)
ALPHAS = [0.0, 0.4, -0.7, 0.5j, 0.6 - 0.6j, 1.0]


def test_domain():
    with pytest.raises(QDomainError):
        CoherentParams(1.5, QContext())  # (1-q)|alpha|^2 = 1.125
    with pytest.raises(QDomainError):
        CoherentParams(float("nan"), QContext())
    with pytest.raises(QDomainError):
        coherent_closed(CoherentParams(1.0, QContext(mu=0.1)))


def test_normalization_oracle():
    mpmath.mp.dps = 30
    expected = mpmath.sqrt(mpmath.qp(mpmath.mpf("0.5") * mpmath.mpf("0.49"), mpmath.mpf("0.5")))
    mpmath.mp.dps = 15
    assert normalization(0.7, 0.5) == pytest.approx(float(expected), rel=1e-14)


def test_vacuum_is_ground_state():
    state = coherent_series(CoherentParams(0.0, WIDE))
    assert (state - wavefunction(0, WIDE)).sup_norm() < 1e-15


@pytest.mark.parametrize("alpha", ALPHAS)
def test_eigenvector_and_norm(alpha):
    p = CoherentParams(alpha, WIDE)
    state = coherent_series(p)
    assert (apply_annihilation(state) - state * p.alpha).sup_norm() < 1e-8
    assert abs(inner_product(state, state) - 1.0) < 1e-8


@pytest.mark.parametrize("alpha", ALPHAS)
def test_series_matches_closed(alpha):
    p = CoherentParams(alpha, WIDE)
    closed = coherent_closed(p)
    assert (coherent_series(p) - closed).sup_norm() / closed.sup_norm() < 1e-9


def test_overlap():
    states = {a: coherent_series(CoherentParams(a, WIDE)) for a in ALPHAS}
    for a in ALPHAS:
        for b in ALPHAS:
            expected = coherent_overlap(a, b, WIDE)
            assert abs(inner_product(states[b], states[a]) - expected) < 1e-8
            assert abs(expected) <= 1.0 + 1e-12
    assert coherent_overlap(0.3, 0.3, WIDE) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("t", [0.1, -0.05, 0.08j])
def test_generating_function(t):
    ctx = QContext()
    for s in (0, 1, 5, 12):
        closed = generating_function_closed(t, s, ctx)
        assert abs(generating_function_partial(t, s, ctx) - closed) <= 1e-12 * abs(closed)


def test_generating_function_domain():
    with pytest.raises(QDomainError):
        generating_function_closed(0.7, 0, QContext())  # |q t / mu| > 1
