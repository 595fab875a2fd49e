"""q-oscillator on the lattice: wave functions, ladder operators, Hamiltonian.

Wave functions::

    psi_n(s) = d_n**-1 q**(-s/2) rho(s)**(1/2) c_n(q**-s),   d_n**2 = (q;q)_n / mu**n

Substituting the terminating 2phi0 for ``c_n`` and folding the prefactor
into each term gives::

    psi_n(s) = sqrt((mu;q)_inf/(mu;q)_s) sqrt((q;q)_n (q;q)_s)
               * sum_k (-1)**k mu**((n+s)/2 - k) q**((s-k)(s-k-1)/2)
                       / ((q;q)_{n-k} (q;q)_{s-k} (q;q)_k)

Every term is O(1), so the table is computed in plain double precision
with no overflow for any ``n`` or ``s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

import gmpy2
import numpy as np

from .charlier import LatticePoint, QContext, charlier_recurrence_table, lattice_x, log_weight_rho, weight_rho_scaled
from .exceptions import ContextMismatchError, QDomainError
from .qcore import e_factorial, e_number, log_qpochhammer

__all__ = [
    "GridFunction",
    "NormConstant",
    "norm_constant",
    "wavefunction",
    "wavefunction_table",
    "inner_product",
    "apply_annihilation",
    "apply_creation",
    "apply_hamiltonian",
    "hamiltonian_direct",
    "apply_commutator",
    "q_commutator_residual",
    "apply_number",
    "number_operator_eigencheck",
    "number_commutator_residuals",
    "create_from_ground",
    "lowering_path",
    "raising_path",
    "required_s_max",
    "span_combination",
    "weighted_shift_product",
]


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A complex (or real) function on the lattice ``s = 0..ctx.s_max``."""

    ctx: QContext
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, copy=True)
        if values.dtype.kind not in "fc":
            values = values.astype(float)
        if values.shape != (self.ctx.size,):
            raise ValueError(f"expected {self.ctx.size} lattice values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function has non-finite entries")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def _check(self, other: "GridFunction") -> None:
        if other.ctx != self.ctx:
            raise ContextMismatchError("grid functions live on different contexts")

    def __add__(self, other):
        self._check(other)
        return GridFunction(self.ctx, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return GridFunction(self.ctx, self.values - other.values)

    def __mul__(self, scalar):
        return GridFunction(self.ctx, self.values * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return GridFunction(self.ctx, self.values / scalar)

    def __neg__(self):
        return GridFunction(self.ctx, -self.values)

    def __len__(self):
        return self.ctx.size

    def __getitem__(self, s):
        return self.values[s]

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)))

    @classmethod
    def zeros(cls, ctx: QContext, dtype=float) -> "GridFunction":
        return cls(ctx, np.zeros(ctx.size, dtype=dtype))


@dataclass(frozen=True)
class NormConstant:
    n: int
    d_squared: float


def norm_constant(n: int, ctx: QContext) -> NormConstant:
    """``d_n**2 = (q;q)_n / mu**n``."""
    return NormConstant(n, math.exp(log_qpochhammer(ctx.q, ctx.q, n) - n * math.log(ctx.mu)))


# --- wave functions ------------------------------------------------------------


@lru_cache(maxsize=32)
def _log_pochhammer_tables(q: float, mu: float, size: int):
    qk = q ** np.arange(1, size + 1)
    log_qq = np.concatenate([[0.0], np.cumsum(np.log1p(-qk))])
    muk = mu * q ** np.arange(size)
    log_mu = np.concatenate([[0.0], np.cumsum(np.log1p(-muk))])
    log_mu_inf = log_qpochhammer(mu, q)
    return log_qq, log_mu, log_mu_inf


def _compute_table(q: float, mu: float, n_max: int, s_max: int) -> np.ndarray:
    size = max(n_max, s_max) + 1
    log_qq, log_mu, log_mu_inf = _log_pochhammer_tables(q, mu, size)
    n = np.arange(n_max + 1)[:, None, None]
    s = np.arange(s_max + 1)[None, :, None]
    k = np.arange(min(n_max, s_max) + 1)[None, None, :]
    valid = (k <= n) & (k <= s)
    nk = np.where(valid, n - k, 0)
    sk = np.where(valid, s - k, 0)
    log_mag = (
        0.5 * (log_mu_inf - log_mu[s])
        + 0.5 * (log_qq[n] + log_qq[s])
        - log_qq[nk]
        - log_qq[sk]
        - log_qq[k]
        + ((n + s) / 2.0 - k) * math.log(mu)
        + 0.5 * sk * (sk - 1) * math.log(q)
    )
    with np.errstate(under="ignore"):
        terms = np.where(valid, np.exp(np.where(valid, log_mag, -np.inf)), 0.0)
    terms *= np.where(k % 2 == 0, 1.0, -1.0)
    return terms.sum(axis=2)


_TABLE_BLOCK = 32


@lru_cache(maxsize=64)
def _cached_table(ctx: QContext, n_rows: int) -> np.ndarray:
    table = _compute_table(ctx.q, ctx.mu, n_rows - 1, ctx.s_max)
    table.flags.writeable = False
    return table


def wavefunction_table(ctx: QContext, n_max: int) -> np.ndarray:
    """Read-only array ``T[n, s] = psi_n(s)`` for ``n <= n_max``, ``s <= s_max``.

    Tables are cached per context in blocks of 32 rows.
    """
    if n_max < 0:
        raise QDomainError(f"negative n_max: {n_max}")
    rows = _TABLE_BLOCK * (n_max // _TABLE_BLOCK + 1)
    return _cached_table(ctx, rows)[: n_max + 1]


def wavefunction(n: int, ctx: QContext) -> GridFunction:
    """``psi_n`` on the truncated lattice."""
    if n < 0:
        raise QDomainError(f"negative index: {n}")
    return GridFunction(ctx, wavefunction_table(ctx, n)[n])


def weighted_shift_product(c: complex, ctx: QContext) -> np.ndarray:
    """``(rho(s) q^-s)^(1/2) (c q^(1-s); q)_s`` for ``s = 0..s_max``.

    Uses ``(c q^(1-s); q)_s = q^(-s(s-1)/2) prod_{m<s} (q^m - c)``, whose
    power of ``q`` cancels the ``q^(s^2)`` inside ``rho``::

        = sqrt((mu;q)_inf mu^s / ((q;q)_s (mu;q)_s)) prod_{m<s} (q^m - c)
    """
    q, mu = ctx.q, ctx.mu
    log_qq, log_mu, log_mu_inf = _log_pochhammer_tables(q, mu, ctx.size)
    s = np.arange(ctx.size)
    amplitude = np.exp(0.5 * (log_mu_inf + s * math.log(mu) - log_qq[s] - log_mu[s]))
    factors = q ** np.arange(ctx.s_max) - c
    products = np.concatenate([[1.0], np.cumprod(factors)])
    return amplitude * products


def span_combination(coeffs: Iterable[complex], ctx: QContext) -> GridFunction:
    """``sum_n coeffs[n] psi_n``."""
    coeffs = np.asarray(list(coeffs))
    table = wavefunction_table(ctx, len(coeffs) - 1)
    return GridFunction(ctx, coeffs @ table)


def inner_product(f: GridFunction, g: GridFunction) -> complex:
    """``sum_s f(s) conj(g(s))``."""
    f._check(g)
    value = np.sum(f.values * np.conj(g.values))
    return complex(value) if np.iscomplexobj(value) else float(value)


# --- ladder operators ----------------------------------------------------------


@lru_cache(maxsize=64)
def _operator_coefficients(ctx: QContext):
    q, mu = ctx.q, ctx.mu
    s = np.arange(ctx.size)
    qs = q**s
    diag = math.sqrt(mu) * qs
    # B(s) = sqrt((1 - q^{s+1})(1 - mu q^s)); B(-1) = 0 since 1 - q^0 = 0
    shift = np.sqrt((1.0 - q * qs) * (1.0 - mu * qs))
    scale = 1.0 / math.sqrt(1.0 - q)
    for arr in (diag, shift):
        arr.flags.writeable = False
    return scale, diag, shift


def apply_annihilation(f: GridFunction) -> GridFunction:
    """``(a f)(s) = (1-q)^{-1/2} [mu^{1/2} q^s f(s) - B(s) f(s+1)]``, ``f(s_max+1) = 0``."""
    scale, diag, shift = _operator_coefficients(f.ctx)
    v = f.values
    forward = np.zeros_like(v)
    forward[:-1] = v[1:]
    return GridFunction(f.ctx, scale * (diag * v - shift * forward))


def apply_creation(f: GridFunction) -> GridFunction:
    """``(a+ f)(s) = (1-q)^{-1/2} [mu^{1/2} q^s f(s) - B(s-1) f(s-1)]``.

    The shifted term at ``s = 0`` is exactly zero; ``f(-1)`` is never read.
    """
    scale, diag, shift = _operator_coefficients(f.ctx)
    v = f.values
    backward = np.zeros_like(v)
    backward[1:] = shift[:-1] * v[:-1]
    return GridFunction(f.ctx, scale * (diag * v - backward))


def apply_hamiltonian(f: GridFunction) -> GridFunction:
    """``H f = a+ (a f)``."""
    return apply_creation(apply_annihilation(f))


def hamiltonian_direct(f: GridFunction) -> GridFunction:
    """Closed three-term form of ``H``.

    ::

        (1-q) H = mu q^{2s} + (1-q^s)(1-mu q^{s-1})
                  - mu^{1/2} q^s sqrt((1-q^{s+1})(1-mu q^s)) e^{d/ds}
                  - mu^{1/2} q^{s-1} sqrt((1-q^s)(1-mu q^{s-1})) e^{-d/ds}

    The last square root covers the whole product ``(1-q^s)(1-mu q^{s-1})``.
    """
    ctx = f.ctx
    q, mu = ctx.q, ctx.mu
    s = np.arange(ctx.size)
    qs = q**s
    diag = mu * qs**2 + (1.0 - qs) * (1.0 - mu * qs / q)
    up = math.sqrt(mu) * qs * np.sqrt((1.0 - q * qs) * (1.0 - mu * qs))
    down = math.sqrt(mu) * (qs / q) * np.sqrt(np.maximum((1.0 - qs) * (1.0 - mu * qs / q), 0.0))
    v = f.values
    fwd = np.zeros_like(v)
    fwd[:-1] = v[1:]
    bwd = np.zeros_like(v)
    bwd[1:] = v[:-1]
    return GridFunction(ctx, (diag * v - up * fwd - down * bwd) / (1.0 - q))


def apply_commutator(f: GridFunction) -> GridFunction:
    """``[a, a+] f = a a+ f - a+ a f``."""
    return apply_annihilation(apply_creation(f)) - apply_creation(apply_annihilation(f))


def q_commutator_residual(f: GridFunction) -> GridFunction:
    """``(a a+ - q a+ a) f - f``."""
    q = f.ctx.q
    return apply_annihilation(apply_creation(f)) - q * apply_hamiltonian(f) - f


def create_from_ground(n: int, ctx: QContext) -> GridFunction:
    """``(e_n!)^{-1/2} (a+)^n psi_0``."""
    f = wavefunction(0, ctx)
    for _ in range(n):
        f = apply_creation(f)
    return f / math.sqrt(e_factorial(n, ctx.q))


# --- number operator -----------------------------------------------------------


def apply_number(f: GridFunction, n_cap: Optional[int] = None) -> GridFunction:
    """Spectral number operator ``N f = sum_n n <f, psi_n> psi_n``.

    The expansion stops after the last ``n <= n_cap`` whose coefficient
    exceeds ``ctx.tol`` in magnitude (``n_cap`` defaults to ``s_max``).
    """
    ctx = f.ctx
    n_cap = ctx.s_max if n_cap is None else n_cap
    table = wavefunction_table(ctx, n_cap)
    coeffs = table @ f.values
    significant = np.nonzero(np.abs(coeffs) >= ctx.tol)[0]
    if significant.size == 0:
        return GridFunction.zeros(ctx, dtype=f.values.dtype)
    last = significant[-1] + 1
    weights = np.arange(last) * coeffs[:last]
    return GridFunction(ctx, weights @ table[:last])


def number_operator_eigencheck(n: int, ctx: QContext) -> float:
    """``|log_q(1 - (1-q) e_n) - n|``.

    Checks that the number operator written as a function of the energy
    recovers ``n`` from the spectrum ``e_n``.  The operator side is covered by
    :func:`number_commutator_residuals` and :func:`apply_number`.
    """
    q = ctx.q
    arg = 1.0 - (1.0 - q) * e_number(n, q)
    if arg <= 0:
        raise QDomainError(f"1 - (1-q) e_n = {arg} is not positive")
    return abs(math.log(arg) / math.log(q) - n)


def number_commutator_residuals(f: GridFunction, n_cap: Optional[int] = None) -> tuple[float, float]:
    """Sup-norms of ``[a, N] f - a f`` and ``[N, a+] f - a+ f``."""
    af = apply_annihilation(f)
    apf = apply_creation(f)
    nf = apply_number(f, n_cap)
    r1 = apply_annihilation(nf) - apply_number(af, n_cap) - af
    r2 = apply_number(apf, n_cap) - apply_creation(nf) - apf
    return r1.sup_norm(), r2.sup_norm()


# --- difference-differentiation paths ------------------------------------------


# differences of polynomial values cancel heavily; keep them in wide arithmetic
_PATH_PRECISION = 512


def _log_abs(x) -> float:
    return float(gmpy2.log(abs(x)))


def _path_grid(ctx: QContext, values) -> GridFunction:
    return GridFunction(ctx, np.array(values, dtype=float))


def lowering_path(n: int, ctx: QContext) -> GridFunction:
    """``a psi_n`` rebuilt from ``mu q^s Delta c_n`` on the polynomial side.

    ``a psi_n(s) = -(1-q)^{-1/2} mu^{-1/2} d_n^{-1} q^{-s/2} rho(s)^{1/2} * mu q^s Delta c_n(q^{-s})``;
    polynomial values come from the multiprecision recurrence, so this path
    shares no code with :func:`apply_annihilation` or :func:`wavefunction`.
    """
    if n < 1:
        raise QDomainError("lowering path needs n >= 1")
    with gmpy2.context(gmpy2.get_context(), precision=_PATH_PRECISION):
        return _lowering_path(n, ctx)


def _lowering_path(n: int, ctx: QContext) -> GridFunction:
    q, mu = ctx.q, ctx.mu
    log_d = 0.5 * math.log(norm_constant(n, ctx).d_squared)
    const = -0.5 * math.log(1.0 - q) - 0.5 * math.log(mu) - log_d
    out = []
    for s in range(ctx.size):
        c_here = charlier_recurrence_table(n, LatticePoint.at(s, q), ctx)[n]
        c_next = charlier_recurrence_table(n, LatticePoint.at(s + 1, q), ctx)[n]
        delta = gmpy2.mpfr(mu) * gmpy2.mpfr(q) ** s * (c_next - c_here)
        if delta == 0:
            out.append(0.0)
            continue
        log_w = 0.5 * log_weight_rho(s, ctx) - 0.5 * s * math.log(q)
        mag = math.exp(_log_abs(delta) + log_w + const)
        out.append(-mag if delta > 0 else mag)
    return _path_grid(ctx, out)


def raising_path(n: int, ctx: QContext) -> GridFunction:
    """``a+ psi_n`` rebuilt from ``q^s Nabla[rho c_n] / rho``.

    ``a+ psi_n(s) = (1-q)^{-1/2} mu^{1/2} d_n^{-1} q^{-s/2} rho(s)^{1/2} * q^s Nabla[rho c_n](s) / rho(s)``
    with ``rho(-1) = 0``.
    """
    with gmpy2.context(gmpy2.get_context(), precision=_PATH_PRECISION):
        return _raising_path(n, ctx)


def _raising_path(n: int, ctx: QContext) -> GridFunction:
    q, mu = ctx.q, ctx.mu
    log_d = 0.5 * math.log(norm_constant(n, ctx).d_squared)
    const = -0.5 * math.log(1.0 - q) + 0.5 * math.log(mu) - log_d
    out = []
    prev_c = None
    for s in range(ctx.size):
        c_here = charlier_recurrence_table(n, LatticePoint.at(s, q), ctx)[n]
        bracket = c_here
        if s > 0:
            m0, e0 = weight_rho_scaled(s, ctx)
            m1, e1 = weight_rho_scaled(s - 1, ctx)
            ratio = gmpy2.mpfr(m1 / m0) * gmpy2.mpfr(2) ** (e1 - e0)
            bracket = c_here - ratio * prev_c
        prev_c = c_here
        value = gmpy2.mpfr(q) ** s * bracket
        if value == 0:
            out.append(0.0)
            continue
        log_w = 0.5 * log_weight_rho(s, ctx) - 0.5 * s * math.log(q)
        mag = math.exp(_log_abs(value) + log_w + const)
        out.append(mag if value > 0 else -mag)
    return _path_grid(ctx, out)


# --- truncation policy -----------------------------------------------------------


def required_s_max(ctx: QContext, n_max: int, tail_tol: float = 1e-14, margin: int = 2) -> int:
    """Smallest lattice size whose tail is negligible for ``psi_0..psi_{n_max}``.

    Returns ``S + margin`` where ``S`` is the last site with
    ``max_n psi_n(s)**2 >= tail_tol``; the margin absorbs the one-site shift
    of each ladder operator.  ``ctx.s_max`` is only used as a starting guess.
    """
    probe = ctx.with_(s_max=max(ctx.s_max, 2 * n_max + 16))
    while True:
        table = wavefunction_table(probe, n_max)
        mass = np.max(table**2, axis=0)
        above = np.nonzero(mass >= tail_tol)[0]
        last = int(above[-1]) if above.size else 0
        if last + margin < probe.s_max:
            return last + margin
        probe = probe.with_(s_max=2 * probe.s_max)
