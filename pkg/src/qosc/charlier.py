"""Al-Salam--Carlitz q-Charlier polynomials and their weight.

``c_n(x) = c_n^mu(x|q)`` on the lattice ``x = q**-s``, orthogonal with
respect to ``rho(s) q**-s`` where::

    rho(s) = (mu;q)_inf mu**s q**(s*s) / ((q;q)_s (mu;q)_s)

``rho`` underflows double precision near ``s = 32`` for ``q = 0.5``, so the
weight is also available as an exactly-scaled ``(mantissa, exponent)`` pair
and as a logarithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import gmpy2

from . import qcore
from .exceptions import ConvergenceError, QDomainError
from .qcore import check_q, qpochhammer_finite, qpochhammer_infinite

__all__ = [
    "QContext",
    "LatticePoint",
    "lattice_x",
    "charlier_recurrence",
    "charlier_recurrence_table",
    "charlier_explicit",
    "charlier_explicit_terms",
    "charlier_explicit_scaled",
    "weight_rho",
    "weight_rho_scaled",
    "log_weight_rho",
    "weight_rho_product_form",
    "sigma",
    "pearson_residual",
    "charlier_classical",
    "diff_lowering_residual",
    "diff_raising_residual",
]


@dataclass(frozen=True)
class QContext:
    """Model parameters ``(q, mu)`` with lattice truncation and tolerance.

    Every evaluation in the package is relative to one context.  Instances
    are immutable and hashable, so they double as cache keys.
    """

    q: float = 0.5
    mu: float = 0.3
    s_max: int = 60
    tol: float = 1e-10

    def __post_init__(self):
        q = check_q(self.q)
        mu = float(self.mu)
        if not math.isfinite(mu) or not 0.0 < mu < 1.0:
            raise QDomainError(f"mu outside (0,1): {self.mu!r}")
        if isinstance(self.s_max, bool) or int(self.s_max) != self.s_max or self.s_max < 1:
            raise QDomainError(f"s_max must be a positive integer, got {self.s_max!r}")
        tol = float(self.tol)
        if not tol > 0 or not math.isfinite(tol):
            raise QDomainError(f"tol must be positive, got {self.tol!r}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "s_max", int(self.s_max))
        object.__setattr__(self, "tol", tol)

    def with_(self, **changes) -> "QContext":
        return replace(self, **changes)

    @property
    def size(self) -> int:
        return self.s_max + 1


@lru_cache(maxsize=64)
def _lattice_table(q: float, s_max: int) -> tuple[float, ...]:
    xs = [1.0]
    for _ in range(s_max):
        xs.append(xs[-1] / q)
    return tuple(xs)


def lattice_x(s: int, q: float) -> float:
    """``q**-s`` by repeated division, so equal ``s`` always gives the same float."""
    if s < 0:
        raise QDomainError(f"lattice index must be nonnegative, got {s}")
    return _lattice_table(check_q(q), max(int(s), 64))[s]


@dataclass(frozen=True)
class LatticePoint:
    s: int
    x: float

    @classmethod
    def at(cls, s: int, q: float) -> "LatticePoint":
        return cls(int(s), lattice_x(s, q))


def _as_point(pt, q: float) -> LatticePoint:
    if isinstance(pt, LatticePoint):
        return pt
    return LatticePoint.at(pt, q)


# --- polynomials -----------------------------------------------------------


RECURRENCE_RTOL = 2.0**-80


def _run_recurrence(n_max: int, x, ctx: QContext) -> list:
    q, mu = gmpy2.mpfr(ctx.q), gmpy2.mpfr(ctx.mu)
    x = q ** -x.s if isinstance(x, LatticePoint) else gmpy2.mpfr(x)
    values = [gmpy2.mpfr(1)]
    if n_max == 0:
        return values
    values.append((mu + q - q * x) / mu)
    qn = q  # q**n for the step producing c_{n+1}
    for n in range(1, n_max):
        c_prev, c_cur = values[-2], values[-1]
        values.append((qn * q / mu) * (((mu + q) / (qn * q) - x) * c_cur - (1 - qn) / qn * c_prev))
        qn *= q
    return values


def _agree(a: list, b: list) -> bool:
    return all(abs(u - v) <= RECURRENCE_RTOL * abs(v) for u, v in zip(a, b))


def charlier_recurrence_table(n_max: int, x, ctx: QContext, max_precision: int = 1 << 16) -> list:
    """``[c_0(x), ..., c_{n_max}(x)]`` from the three-term recurrence in multiprecision.

    ::

        c_{n+1} = (q**(n+1)/mu) * [((mu + q) q**(-n-1) - x) c_n - (1 - q**n) q**-n c_{n-1}]

    In double precision the forward recurrence is unstable whenever
    ``q > mu`` and ``n > s`` (the polynomial is then the minimal solution).
    It is therefore run at ``P`` and ``2P`` bits, doubling ``P`` until both
    runs agree to ``2**-80`` relative; the higher-precision values are
    returned as ``gmpy2.mpfr``.

    ``x`` is a float or a :class:`LatticePoint`.  A lattice point is used as
    ``q**-s`` at working precision rather than as its rounded float, since
    ``c_n`` is very sensitive to ``x`` for large ``n``.
    """
    if n_max < 0:
        raise QDomainError(f"negative degree: {n_max}")
    prec = 128 + 8 * n_max
    while prec <= max_precision:
        with gmpy2.context(gmpy2.get_context(), precision=prec):
            low = _run_recurrence(n_max, x, ctx)
        with gmpy2.context(gmpy2.get_context(), precision=2 * prec):
            high = _run_recurrence(n_max, x, ctx)
            if _agree(low, high):
                return high
        prec *= 2
    raise ConvergenceError(f"recurrence did not stabilise below {max_precision} bits")


def charlier_recurrence(n: int, x, ctx: QContext) -> float:
    """``c_n(x)`` via the recurrence, rounded once to double precision."""
    return float(charlier_recurrence_table(n, x, ctx)[n])


def charlier_explicit_terms(n: int, pt, ctx: QContext):
    """Terms of ``2phi0(q**-n, x; q, q**(1+n)/mu)``; exactly ``min(n, s) + 1`` of them."""
    pt = _as_point(pt, ctx.q)
    z = ctx.q ** (1 + n) / ctx.mu
    return qcore.phi20_terms(lattice_x(n, ctx.q), pt.x, ctx.q, z, n_terms=min(n, pt.s) + 1)


def charlier_explicit(n: int, pt, ctx: QContext) -> float:
    """``c_n(q**-s)`` from its terminating 2phi0 representation.

    ``pt`` is a :class:`LatticePoint` or a lattice index ``s``.
    """
    if n < 0:
        raise QDomainError(f"negative degree: {n}")
    terms = charlier_explicit_terms(n, pt, ctx)
    if not all(math.isfinite(t) for t in terms):
        raise OverflowError(f"c_{n}(q^-s) exceeds double range at s={_as_point(pt, ctx.q).s}")
    return math.fsum(terms)


def charlier_explicit_scaled(n: int, pt, ctx: QContext) -> tuple[float, int]:
    """``c_n(q**-s)`` as ``(mantissa, exponent)`` with value ``mantissa * 2**exponent``.

    Same terms as :func:`charlier_explicit`, each carried as a renormalised
    mantissa and binary exponent, so degrees and sites whose value leaves the
    double range still sum to full relative precision.
    """
    if n < 0:
        raise QDomainError(f"negative degree: {n}")
    pt = _as_point(pt, ctx.q)
    q = ctx.q
    a, b, z = lattice_x(n, q), pt.x, q ** (1 + n) / ctx.mu
    mants, exps = [], []
    mant, exp = 1.0, 0
    qk = 1.0
    for k in range(min(n, pt.s) + 1):
        mants.append(mant)
        exps.append(exp)
        mant, e = math.frexp(mant * (1.0 - a * qk) * (1.0 - b * qk) / (1.0 - qk * q) * (-z / qk))
        exp += e
        qk *= q
    top = max(exps)
    total = math.fsum(math.ldexp(m, e - top) for m, e in zip(mants, exps))
    out, e = math.frexp(total)
    return out, top + e


# --- weight ------------------------------------------------------------------


def weight_rho_scaled(s: int, ctx: QContext) -> tuple[float, int]:
    """``rho(s)`` as ``(mantissa, exponent)``, ``rho = mantissa * 2**exponent``."""
    if s < 0:
        raise QDomainError(f"lattice index must be nonnegative, got {s}")
    q, mu = ctx.q, ctx.mu
    m1, e1 = qcore.scaled_power(mu, s)
    m2, e2 = qcore.scaled_power(q, s * s)
    rest = qpochhammer_infinite(mu, q) / (qpochhammer_finite(q, q, s) * qpochhammer_finite(mu, q, s))
    mant, e3 = math.frexp(m1 * m2 * rest)
    return mant, e1 + e2 + e3


def weight_rho(s: int, ctx: QContext) -> float:
    """``rho(s)``; underflows gracefully to 0.0 for very large ``s``."""
    mant, exp = weight_rho_scaled(s, ctx)
    return math.ldexp(mant, exp)


def log_weight_rho(s: int, ctx: QContext) -> float:
    mant, exp = weight_rho_scaled(s, ctx)
    return math.log(mant) + exp * math.log(2.0)


def weight_rho_product_form(s: int, ctx: QContext) -> float:
    """``rho(s) = (q^{s+1}, mu q^s; q)_inf mu^s q^{s^2} / (q;q)_inf``, the second form of the weight."""
    q, mu = ctx.q, ctx.mu
    mant, exp = qcore.scaled_power(q, s * s)
    m2, e2 = qcore.scaled_power(mu, s)
    qs = q**s
    ratio = qpochhammer_infinite(q * qs, q) * qpochhammer_infinite(mu * qs, q) / qpochhammer_infinite(q, q)
    return math.ldexp(mant * m2 * ratio, exp + e2)


def sigma(s: int, ctx: QContext) -> float:
    """``sigma(s) = (1 - q**-s)(mu - q**(1-s))``."""
    x = lattice_x(s, ctx.q)
    return (1.0 - x) * (ctx.mu - ctx.q * x)


def pearson_residual(s: int, ctx: QContext) -> float:
    """``(sigma(s+1) rho(s+1) - mu rho(s)) / rho(s)``.

    The Pearson equation ``Delta(sigma rho) = rho tau Nabla x_1`` reduced with
    ``sigma + tau Nabla x_1 = mu``.  The residual is returned in units of
    ``rho(s)`` so it stays meaningful where ``rho`` itself underflows; both
    weights are evaluated independently from their definition.
    """
    m0, e0 = weight_rho_scaled(s, ctx)
    m1, e1 = weight_rho_scaled(s + 1, ctx)
    ratio = math.ldexp(m1 / m0, e1 - e0)
    return sigma(s + 1, ctx) * ratio - ctx.mu


# --- classical limit ---------------------------------------------------------


def charlier_classical(n: int, s: int, mu: float) -> float:
    """Classical Charlier ``2F0(-n, -s; -1/mu)`` (rising Pochhammer symbols)."""
    if n < 0 or s < 0:
        raise QDomainError("n and s must be nonnegative")
    if not mu > 0:
        raise QDomainError(f"mu must be positive, got {mu!r}")
    terms = []
    term = 1.0
    for k in range(min(n, s) + 1):
        terms.append(term)
        term *= (k - n) * (k - s) / (k + 1) * (-1.0 / mu)
    return math.fsum(terms)


# --- difference-differentiation formulas ---------------------------------------


def diff_lowering_residual(n: int, s: int, ctx: QContext) -> float:
    """Relative residual of ``mu q^s Delta c_n(x) = (q^n - 1) c_{n-1}(x)``.

    ``Delta f(s) = f(s+1) - f(s)``.  Scaled by the larger side's magnitude.
    """
    if n < 1:
        raise QDomainError("lowering formula needs n >= 1")
    if s + 1 > ctx.s_max:
        raise QDomainError(f"forward difference at s={s} needs s+1 <= s_max={ctx.s_max}")
    q, mu = ctx.q, ctx.mu
    lhs = mu * q**s * (charlier_explicit(n, s + 1, ctx) - charlier_explicit(n, s, ctx))
    rhs = (q**n - 1.0) * charlier_explicit(n - 1, s, ctx)
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)


def diff_raising_residual(n: int, s: int, ctx: QContext) -> float:
    """Relative residual of ``q^s Nabla[rho(s) c_n(x)] = rho(s) c_{n+1}(x)``.

    ``Nabla f(s) = f(s) - f(s-1)`` with ``rho(-1) = 0``.  Both sides are
    divided by ``rho(s)`` before comparison.
    """
    if n < 0 or s < 0:
        raise QDomainError("n and s must be nonnegative")
    q = ctx.q
    if s == 0:
        back = 0.0
    else:
        m0, e0 = weight_rho_scaled(s, ctx)
        m1, e1 = weight_rho_scaled(s - 1, ctx)
        back = math.ldexp(m1 / m0, e1 - e0) * charlier_explicit(n, s - 1, ctx)
    lhs = q**s * (charlier_explicit(n, s, ctx) - back)
    rhs = charlier_explicit(n + 1, s, ctx)
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)
