import numpy as np
import pytest

from qosc import QContext
from qosc.exceptions import ContextMismatchError, ConvergenceError, DenominatorPoleError
from qosc.fourier import (
    KernelMatrix,
    apply_transform,
    bilinear_generating,
    bilinear_partial,
    build_kernel,
    kernel_closed,
    kernel_series,
    kernel_series_matrix,
    unitarity_margin,
    unitarity_residual,
)
from qosc.oscillator import span_combination, wavefunction, wavefunction_table

# K_{0.3}(4, 1) at q = 0.5, mu = 0.3 from a 30-digit mpmath series, frozen
K_03_4_1 = -0.000648401698542906


def test_frozen_entry(ctx):
    assert kernel_series(0.3, 4, 1, ctx) == pytest.approx(K_03_4_1, rel=1e-12)
    assert kernel_closed(0.3, 4, 1, ctx) == pytest.approx(K_03_4_1, rel=1e-12)


def test_t_zero_is_ground_projector(ctx):
    psi0 = wavefunction(0, ctx).values
    for s, p in [(0, 0), (1, 2), (5, 3)]:
        assert kernel_closed(0.0, s, p, ctx) == pytest.approx(psi0[s] * psi0[p], rel=1e-14)


@pytest.mark.parametrize("t", [1j, -1j, 0.3, -0.8, 0.6 + 0.2j, np.exp(0.7j)])
def test_closed_matches_series(ctx, t):
    series = kernel_series_matrix(t, ctx)[:13, :13]
    closed = np.array([[kernel_closed(t, s, p, ctx) for p in range(13)] for s in range(13)])
    assert np.max(np.abs(series - closed)) / np.max(np.abs(series)) < 1e-9


def test_symmetric(ctx):
    k = build_kernel(1j, ctx)
    assert np.array_equal(k.entries, k.entries.T)
    assert not k.entries.flags.writeable


def test_eigenfunctions(ctx):
    k = build_kernel(1j, ctx)
    for m in range(16):
        psi = wavefunction(m, ctx)
        assert (apply_transform(k, psi) - psi * (1j**m)).sup_norm() < 1e-10


def test_fourth_power_identity(ctx):
    k = build_kernel(1j, ctx)
    f = span_combination(np.random.default_rng(3).normal(size=16), ctx)
    g = f
    for _ in range(4):
        g = apply_transform(k, g)
    assert (g - f).sup_norm() < 1e-10


def test_unitarity_interior(ctx):
    k = build_kernel(1j, ctx)
    margin = unitarity_margin(1j, ctx)
    assert 0 < margin < ctx.size
    assert unitarity_residual(k, margin) < 1e-12
    assert unitarity_residual(k) == unitarity_residual(k, margin)


def test_unitarity_improves_with_lattice():
    residuals = []
    for s_max in (40, 50, 60):
        k = build_kernel(1j, QContext(s_max=s_max))
        block = k.entries[:31]
        residuals.append(np.max(np.abs(block @ block.conj().T - np.eye(31))))
    assert residuals[0] > residuals[1] > residuals[2]


def test_completeness_at_t_one(ctx):
    k = build_kernel(1.0, ctx, method="series")
    inner = ctx.size - 28
    assert np.max(np.abs(k.entries[:inner, :inner] - np.eye(inner))) < 1e-10


def test_series_diverges(ctx):
    with pytest.raises(ConvergenceError):
        kernel_series_matrix(4.0, ctx)


def test_kernel_matrix_guards(ctx):
    with pytest.raises(ValueError):
        KernelMatrix(1j, ctx, np.zeros((3, 3)))
    with pytest.raises(ValueError):
        build_kernel(1j, ctx, method="fft")
    small = QContext(s_max=10)
    with pytest.raises(ContextMismatchError):
        apply_transform(build_kernel(1j, small), wavefunction(0, ctx))


@pytest.mark.parametrize("t", [0.05, -0.04 + 0.02j])
def test_bilinear_generating(t):
    q, mu1, mu2 = 0.5, 0.3, 0.4
    for s, p in [(0, 0), (2, 3), (6, 1)]:
        closed = bilinear_generating(mu1, mu2, q**-s, q**-p, t, q)
        assert abs(bilinear_partial(mu1, mu2, s, p, t, q) - closed) <= 1e-11 * abs(closed)


def test_series_rows_resolve_table(ctx):
    table = wavefunction_table(ctx, 10)
    k = kernel_series_matrix(0.0, ctx)
    assert np.allclose(k, np.outer(table[0], table[0]), atol=1e-16)


def test_removable_pole_uses_series(ctx):
    # t q^(1-s) = 1 at t = q, s = 2
    small = QContext(s_max=12)
    with pytest.raises(DenominatorPoleError):
        kernel_closed(0.5, 2, 2, small)
    closed = build_kernel(0.5, small).entries
    series = build_kernel(0.5, small, method="series").entries
    assert np.max(np.abs(closed - series)) < 1e-12
