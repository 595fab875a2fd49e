import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qosc import GridFunction, QContext
from qosc.exceptions import ContextMismatchError
from qosc.oscillator import (
    apply_annihilation,
    apply_commutator,
    apply_creation,
    apply_hamiltonian,
    apply_number,
    create_from_ground,
    hamiltonian_direct,
    inner_product,
    lowering_path,
    norm_constant,
    number_commutator_residuals,
    number_operator_eigencheck,
    q_commutator_residual,
    raising_path,
    required_s_max,
    span_combination,
    wavefunction,
    wavefunction_table,
)
from qosc.qcore import e_number

# psi_2(3), psi_5(7) at q = 0.5, mu = 0.3 from a 30-digit mpmath sum, frozen
PSI_2_3 = 0.7074670666308331
PSI_5_7 = -0.3320993631283327


def test_frozen_values(ctx):
    assert wavefunction(2, ctx)[3] == pytest.approx(PSI_2_3, rel=1e-13)
    assert wavefunction(5, ctx)[7] == pytest.approx(PSI_5_7, rel=1e-13)
    assert norm_constant(2, ctx).d_squared == pytest.approx(0.5 * 0.75 / 0.09, rel=1e-14)


def test_orthonormal(ctx):
    table = wavefunction_table(ctx, 20)
    assert np.max(np.abs(table @ table.T - np.eye(21))) < 1e-9


def test_large_degree_finite():
    ctx = QContext(s_max=150)
    table = wavefunction_table(ctx, 140)
    assert np.all(np.isfinite(table))


def test_grid_function_guards(ctx):
    f = wavefunction(0, ctx)
    with pytest.raises(ValueError):
        GridFunction(ctx, np.ones(3))
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(ContextMismatchError):
        f + wavefunction(0, ctx.with_(s_max=10).with_(s_max=61))


@pytest.mark.parametrize("n", [0, 1, 7, 20])
def test_ladder(ctx, n):
    q = ctx.q
    psi = wavefunction(n, ctx)
    lower = apply_annihilation(psi)
    target = wavefunction(n - 1, ctx) * math.sqrt(e_number(n, q)) if n else GridFunction.zeros(ctx)
    assert (lower - target).sup_norm() < 1e-10
    upper = apply_creation(psi)
    assert (upper - wavefunction(n + 1, ctx) * math.sqrt(e_number(n + 1, q))).sup_norm() < 1e-10


@pytest.mark.parametrize("n", [1, 5, 20])
def test_difference_paths(ctx, n):
    psi = wavefunction(n, ctx)
    assert (lowering_path(n, ctx) - apply_annihilation(psi)).sup_norm() < 1e-12
    assert (raising_path(n, ctx) - apply_creation(psi)).sup_norm() < 1e-12


def test_hamiltonian(ctx):
    assert apply_hamiltonian(wavefunction(0, ctx)).sup_norm() < 1e-15
    psi4 = wavefunction(4, ctx)
    assert (apply_hamiltonian(psi4) - psi4 * 1.875).sup_norm() < 1e-12


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_hamiltonian_direct_form(seed):
    """The last square root of the direct form is read as covering both factors."""
    ctx = QContext()
    f = GridFunction(ctx, np.random.default_rng(seed).uniform(-1, 1, ctx.size))
    assert (apply_hamiltonian(f) - hamiltonian_direct(f)).sup_norm() < 1e-12


@settings(max_examples=25, deadline=None)
@given(coeffs=st.lists(st.floats(-1, 1), min_size=16, max_size=16))
def test_q_commutator(coeffs):
    ctx = QContext()
    f = span_combination(coeffs, ctx)
    scale = max(f.sup_norm(), 1e-300)
    assert q_commutator_residual(f).sup_norm() <= 1e-10 * scale + 1e-300


def test_plain_commutator(ctx):
    for n in range(16):
        psi = wavefunction(n, ctx)
        assert (apply_commutator(psi) - psi * ctx.q**n).sup_norm() < 1e-10


def test_adjoint(ctx):
    rng = np.random.default_rng(1)
    f = span_combination(rng.normal(size=11) + 1j * rng.normal(size=11), ctx)
    g = span_combination(rng.normal(size=11), ctx)
    lhs = inner_product(apply_annihilation(f), g)
    rhs = inner_product(f, apply_creation(g))
    assert abs(lhs - rhs) < 1e-10


def test_create_from_ground(ctx):
    for n in (0, 3, 10):
        assert (create_from_ground(n, ctx) - wavefunction(n, ctx)).sup_norm() < 1e-10


def test_number_operator(ctx):
    for n in range(21):
        assert number_operator_eigencheck(n, ctx) < 1e-10
    psi = wavefunction(6, ctx)
    assert (apply_number(psi) - psi * 6).sup_norm() < 1e-10
    f = span_combination(np.random.default_rng(2).normal(size=11), ctx)
    assert max(number_commutator_residuals(f, n_cap=20)) < 1e-10


def test_required_s_max(ctx):
    s = required_s_max(ctx, 21)
    assert s <= ctx.s_max
    table = wavefunction_table(ctx, 21)
    assert np.max(table[:, s:] ** 2) < 1e-14
