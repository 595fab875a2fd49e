"""q-coherent states: eigenvectors of the annihilation operator.

Series form::

    |alpha> = f_alpha sum_n alpha**n psi_n / sqrt(e_n!),   f_alpha = ((1-q)|alpha|^2; q)_inf^(1/2)

valid for ``(1-q)|alpha|^2 < 1``.  The closed form follows from the
generating function::

    sum_n t**n c_n(x) / (q;q)_n = (q t x / mu; q)_inf / (t, q t / mu; q)_inf,   |t| < 1, |q t / mu| < 1

with ``t = alpha sqrt(mu (1-q))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .charlier import QContext, charlier_explicit, lattice_x
from .exceptions import ConvergenceError, QDomainError
from .oscillator import GridFunction, weighted_shift_product, wavefunction_table
from .qcore import qpochhammer_finite, qpochhammer_infinite

__all__ = [
    "CoherentParams",
    "normalization",
    "series_terms_needed",
    "coherent_series",
    "coherent_closed",
    "coherent_overlap",
    "generating_function_closed",
    "generating_function_partial",
]


@dataclass(frozen=True)
class CoherentParams:
    alpha: complex
    ctx: QContext

    def __post_init__(self):
        alpha = complex(self.alpha)
        if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
            raise QDomainError(f"alpha must be finite, got {self.alpha!r}")
        if (1.0 - self.ctx.q) * abs(alpha) ** 2 >= 1.0:
            raise QDomainError(
                f"(1-q)|alpha|^2 = {(1.0 - self.ctx.q) * abs(alpha) ** 2:.6g} must be < 1"
            )
        object.__setattr__(self, "alpha", alpha)

    @property
    def t(self) -> complex:
        """``alpha sqrt(mu (1-q))``, the generating-function variable."""
        return self.alpha * math.sqrt(self.ctx.mu * (1.0 - self.ctx.q))


def normalization(alpha: complex, q: float) -> float:
    """``f_alpha = ((1-q)|alpha|^2; q)_inf^(1/2)``."""
    return math.sqrt(qpochhammer_infinite((1.0 - q) * abs(alpha) ** 2, q))


def series_terms_needed(p: CoherentParams, cap: int = 5000) -> int:
    """Number of series terms: stop once ``|alpha|**n / sqrt(e_n!) < ctx.tol``."""
    q, tol = p.ctx.q, p.ctx.tol
    a = abs(p.alpha)
    if a == 0:
        return 1
    log_coeff = 0.0
    for n in range(cap):
        if log_coeff < math.log(tol):
            return n
        log_coeff += math.log(a) - 0.5 * math.log((1.0 - q ** (n + 1)) / (1.0 - q))
    raise ConvergenceError(f"coherent series needs more than {cap} terms at alpha={p.alpha}")


def coherent_series(p: CoherentParams) -> GridFunction:
    """``|alpha>`` summed over ``psi_n`` until the coefficients drop below ``ctx.tol``."""
    ctx = p.ctx
    n_terms = series_terms_needed(p)
    table = wavefunction_table(ctx, n_terms - 1)
    q = ctx.q
    coeffs = np.empty(n_terms, dtype=complex)
    coeffs[0] = 1.0
    for n in range(1, n_terms):
        coeffs[n] = coeffs[n - 1] * p.alpha / math.sqrt((1.0 - q**n) / (1.0 - q))
    values = normalization(p.alpha, q) * (coeffs @ table)
    return GridFunction(ctx, values)


def _check_closed_domain(p: CoherentParams) -> None:
    t = p.t
    qt_mu = p.ctx.q * t / p.ctx.mu
    if abs(t) >= 1.0 or abs(qt_mu) >= 1.0:
        raise QDomainError(
            f"closed form needs |t| < 1 and |qt/mu| < 1; got |t|={abs(t):.6g}, |qt/mu|={abs(qt_mu):.6g}"
        )


def coherent_closed(p: CoherentParams) -> GridFunction:
    """``|alpha>`` from the product formula.

    ``f_alpha (rho q^-s)^(1/2) (c q^(1-s); q)_inf / (t, c q; q)_inf`` with
    ``c = alpha sqrt((1-q)/mu)``.  Splitting ``(c q^(1-s); q)_inf =
    (c q^(1-s); q)_s (c q; q)_inf`` cancels the ``(c q; q)_inf`` factor,
    leaving a finite product that cannot overflow.

    Raises
    ------
    QDomainError
        Outside ``|t| < 1, |q t / mu| < 1``, even where the series converges.
    """
    _check_closed_domain(p)
    ctx = p.ctx
    c = p.alpha * math.sqrt((1.0 - ctx.q) / ctx.mu)
    pref = normalization(p.alpha, ctx.q) / qpochhammer_infinite(p.t, ctx.q)
    return GridFunction(ctx, pref * weighted_shift_product(c, ctx))


def coherent_overlap(alpha: complex, beta: complex, ctx: QContext) -> complex:
    """``<alpha|beta> = ((1-q)|alpha|^2, (1-q)|beta|^2; q)_inf^(1/2) / ((1-q) conj(alpha) beta; q)_inf``.

    Equals ``inner_product(|beta>, |alpha>)`` in this package's convention.
    """
    pa, pb = CoherentParams(alpha, ctx), CoherentParams(beta, ctx)
    q = ctx.q
    num = normalization(pa.alpha, q) * normalization(pb.alpha, q)
    return complex(num / qpochhammer_infinite((1.0 - q) * pa.alpha.conjugate() * pb.alpha, q))


def generating_function_closed(t: complex, s: int, ctx: QContext) -> complex:
    """``(q t x / mu; q)_inf / (t, q t / mu; q)_inf`` at ``x = q**-s``."""
    q, mu = ctx.q, ctx.mu
    if abs(t) >= 1.0 or abs(q * t / mu) >= 1.0:
        raise QDomainError(f"generating function needs |t| < 1 and |qt/mu| < 1, got t={t}")
    x = lattice_x(s, q)
    num = qpochhammer_infinite(q * t * x / mu, q)
    return complex(num / (qpochhammer_infinite(t, q) * qpochhammer_infinite(q * t / mu, q)))


def generating_function_partial(t: complex, s: int, ctx: QContext, rtol: float = 1e-17, cap: int = 2000) -> complex:
    """``sum_n t**n c_n(q**-s) / (q;q)_n`` summed until the tail is negligible.

    Stops after ``n > s`` once ten consecutive terms fall below ``rtol``
    times the running sum's magnitude.
    """
    q = ctx.q
    total_re, total_im = [], []
    quiet = 0
    tn = 1.0 + 0j
    for n in range(cap):
        term = tn * charlier_explicit(n, s, ctx) / qpochhammer_finite(q, q, n)
        total_re.append(term.real)
        total_im.append(term.imag)
        running = abs(complex(math.fsum(total_re), math.fsum(total_im)))
        quiet = quiet + 1 if abs(term) < rtol * max(running, 1e-300) else 0
        if n > s and quiet >= 10:
            return complex(math.fsum(total_re), math.fsum(total_im))
        tn *= t
    raise ConvergenceError(f"generating series did not converge within {cap} terms (t={t})")
