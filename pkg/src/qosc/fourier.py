"""Wiener-type kernel ``K_t(s, p) = sum_n t**n psi_n(s) psi_n(p)`` and the discrete q-Fourier transform.

Closed form, from the bilinear generating function with ``mu1 = mu2 = mu``::

    K_t(s, p) = (rho(s) rho(p) q^(-s-p))^(1/2) (t q^(1-s), t q^(1-p); q)_inf / (q t, q t, mu t; q)_inf
                * 3phi2(q^-s, q^-p, mu t; t q^(1-s), t q^(1-p); q, q^2 t / mu)

At ``t = i`` the kernel is unitary and ``K_i psi_m = i**m psi_m``.

The series converges geometrically (ratio ``mu |t|``) because
``c_n(q^-s)`` is a sum of at most ``s + 1`` terms bounded uniformly in ``n``;
``|mu t| < 1`` is required.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charlier import QContext, charlier_explicit, lattice_x
from .exceptions import ContextMismatchError, ConvergenceError, DenominatorPoleError, QDomainError
from .oscillator import GridFunction, weighted_shift_product, wavefunction_table
from .qcore import check_q, phi32, qpochhammer_finite, qpochhammer_infinite

__all__ = [
    "KernelMatrix",
    "series_rows_needed",
    "kernel_series",
    "kernel_series_matrix",
    "kernel_closed",
    "build_kernel",
    "bilinear_generating",
    "bilinear_partial",
    "apply_transform",
    "kernel_row_tail",
    "unitarity_margin",
    "unitarity_residual",
]

_ROW_CAP = 4096


def _check_t(t: complex, ctx: QContext) -> complex:
    t = complex(t)
    if abs(ctx.mu * t) >= 1.0:
        raise ConvergenceError(f"kernel series diverges: |mu t| = {abs(ctx.mu * t):.6g} >= 1")
    return t


def series_rows_needed(t: complex, ctx: QContext, cutoff: float = 1e-18) -> int:
    """Number of ``psi_n`` rows after which ``|t|**n max_s psi_n(s)**2`` stays below ``cutoff``."""
    t = _check_t(t, ctx)
    n_rows = 2 * ctx.s_max + 32
    while n_rows <= _ROW_CAP:
        table = wavefunction_table(ctx, n_rows - 1)
        peak = np.max(table**2, axis=1) * abs(t) ** np.arange(n_rows)
        above = np.nonzero(peak >= cutoff)[0]
        last = int(above[-1]) + 1 if above.size else 1
        if last + 8 < n_rows:
            return last + 8
        n_rows *= 2
    raise ConvergenceError(f"kernel series needs more than {_ROW_CAP} terms at t={t}")


def kernel_series_matrix(t: complex, ctx: QContext) -> np.ndarray:
    """``K_t`` on the truncated lattice from the defining series."""
    t = _check_t(t, ctx)
    n_rows = series_rows_needed(t, ctx)
    table = wavefunction_table(ctx, n_rows - 1)
    powers = t ** np.arange(n_rows)
    return (table.T * powers) @ table


def kernel_series(t: complex, s: int, p: int, ctx: QContext) -> complex:
    """``K_t(s, p)`` from the series ``sum_n t**n psi_n(s) psi_n(p)``."""
    t = _check_t(t, ctx)
    n_rows = series_rows_needed(t, ctx)
    table = wavefunction_table(ctx, n_rows - 1)
    terms = t ** np.arange(n_rows) * table[:, s] * table[:, p]
    return complex(np.sum(terms[::-1]))


def kernel_closed(t: complex, s: int, p: int, ctx: QContext) -> complex:
    """``K_t(s, p)`` from the terminating 3phi2 form.

    The infinite products are reduced with ``(t q^(1-s); q)_inf = (t q^(1-s); q)_s (t q; q)_inf``,
    after which ``(t q; q)_inf**2`` cancels against ``(q t, q t; q)_inf``.

    Raises
    ------
    DenominatorPoleError
        If ``t q^(1-s+k)`` or ``t q^(1-p+k)`` equals 1 within the summation range.
    """
    t = complex(t)
    q, mu = ctx.q, ctx.mu
    if not (0 <= s <= ctx.s_max and 0 <= p <= ctx.s_max):
        raise QDomainError(f"lattice indices ({s}, {p}) outside 0..{ctx.s_max}")
    amp = weighted_shift_product(t, ctx)
    prefactor = amp[s] * amp[p] / qpochhammer_infinite(mu * t, q)
    series = phi32(
        lattice_x(s, q), lattice_x(p, q), mu * t,
        t * q ** (1 - s), t * q ** (1 - p),
        q, q * q * t / mu,
        n_terms=min(s, p) + 1,
    )
    return complex(prefactor * series)


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Dense ``K_t(s, p)`` for ``s, p = 0..ctx.s_max``."""

    t: complex
    ctx: QContext
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex, copy=True)
        if entries.shape != (self.ctx.size, self.ctx.size):
            raise ValueError(f"kernel shape {entries.shape} does not match the lattice")
        if not np.all(np.isfinite(entries)):
            raise ValueError("kernel has non-finite entries")
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "t", complex(self.t))


def build_kernel(t: complex, ctx: QContext, method: str = "closed") -> KernelMatrix:
    """Materialise ``K_t`` densely; ``method`` is ``"closed"`` or ``"series"``.

    The closed form is evaluated on the upper triangle and mirrored, so the
    result is exactly symmetric.  Entries where the closed form hits a
    removable pole (``t q^(1-s+k) = 1``) are taken from the series.
    """
    if method == "series":
        entries = kernel_series_matrix(t, ctx)
        entries = np.triu(entries) + np.triu(entries, 1).T
    elif method == "closed":
        size = ctx.size
        entries = np.empty((size, size), dtype=complex)
        series = None
        for s in range(size):
            for p in range(s, size):
                try:
                    value = kernel_closed(t, s, p, ctx)
                except DenominatorPoleError:
                    if series is None:
                        series = kernel_series_matrix(t, ctx)
                    value = series[s, p]
                entries[s, p] = entries[p, s] = value
    else:
        raise ValueError(f"unknown method {method!r}")
    return KernelMatrix(t, ctx, entries)


def bilinear_generating(mu1: float, mu2: float, x: float, y: float, t: complex, q: float) -> complex:
    """Product/3phi2 side of the bilinear generating function.

    ``(q t x/mu1, q t y/mu2; q)_inf / (t, q t/mu1, q t/mu2; q)_inf
    * 3phi2(x, y, t; q t x/mu1, q t y/mu2; q, q^2 t/(mu1 mu2))``.  ``x`` and
    ``y`` should be lattice values ``q**-s`` so the 3phi2 terminates.
    """
    q = check_q(q)
    t = complex(t)
    denom = qpochhammer_infinite(t, q) * qpochhammer_infinite(q * t / mu1, q) * qpochhammer_infinite(q * t / mu2, q)
    if denom == 0:
        raise QDomainError("bilinear generating function prefactor has a vanishing denominator")
    num = qpochhammer_infinite(q * t * x / mu1, q) * qpochhammer_infinite(q * t * y / mu2, q)
    series = phi32(x, y, t, q * t * x / mu1, q * t * y / mu2, q, q * q * t / (mu1 * mu2))
    return complex(num / denom * series)


def bilinear_partial(
    mu1: float, mu2: float, s: int, p: int, t: complex, q: float, rtol: float = 1e-17, cap: int = 2000
) -> complex:
    """``sum_n c_n^{mu1}(q^-s) c_n^{mu2}(q^-p) t**n / (q;q)_n`` with a tail cutoff."""
    ctx1, ctx2 = QContext(q, mu1), QContext(q, mu2)
    t = complex(t)
    total = []
    quiet = 0
    for n in range(cap):
        term = t**n * charlier_explicit(n, s, ctx1) * charlier_explicit(n, p, ctx2) / qpochhammer_finite(q, q, n)
        total.append(term)
        running = abs(sum(total))
        quiet = quiet + 1 if abs(term) < rtol * max(running, 1e-300) else 0
        if n > max(s, p) and quiet >= 10:
            return complex(sum(sorted(total, key=abs)))
    raise ConvergenceError(f"bilinear series did not converge within {cap} terms (t={t})")


def apply_transform(kernel: KernelMatrix, f: GridFunction) -> GridFunction:
    """``(K f)(s) = sum_p K(s, p) f(p)``."""
    if kernel.ctx != f.ctx:
        raise ContextMismatchError("kernel and grid function live on different contexts")
    return GridFunction(f.ctx, kernel.entries @ f.values)


def kernel_row_tail(t: complex, ctx: QContext, extra: int = 40) -> np.ndarray:
    """Mass ``sum_{s_max < p <= s_max + extra} |K_t(s, p)|**2`` lost by each row ``s`` to truncation.

    Entries beyond the lattice come from the closed form on an extended
    context, or from the series where the closed form is degenerate.
    """
    big = ctx.with_(s_max=ctx.s_max + extra)
    try:
        cols = np.array(
            [[kernel_closed(t, s, p, big) for p in range(ctx.size, big.size)] for s in range(ctx.size)]
        )
    except DenominatorPoleError:
        cols = kernel_series_matrix(t, big)[: ctx.size, ctx.size :]
    return np.sum(np.abs(cols) ** 2, axis=1)


def unitarity_margin(t: complex, ctx: QContext, tail_tol: float = 1e-14, extra: int = 40) -> int:
    """Smallest ``margin`` such that every row ``s <= s_max - margin`` loses less than ``tail_tol``."""
    tail = kernel_row_tail(t, ctx, extra)
    bad = np.nonzero(tail >= tail_tol)[0]
    first_bad = int(bad[0]) if bad.size else ctx.size
    return ctx.size - first_bad


def unitarity_residual(kernel: KernelMatrix, margin: int | None = None) -> float:
    """``max |sum_p K(s,p) conj(K(s',p)) - delta_{s s'}|`` over ``s, s' <= s_max - margin``.

    ``margin=None`` uses :func:`unitarity_margin` for the kernel's ``t``.
    """
    if margin is None:
        margin = unitarity_margin(kernel.t, kernel.ctx)
    inner = kernel.ctx.size - margin
    if inner <= 0:
        raise QDomainError(f"margin {margin} leaves no interior lattice sites")
    block = kernel.entries[:inner]
    gram = block @ block.conj().T
    return float(np.max(np.abs(gram - np.eye(inner))))
