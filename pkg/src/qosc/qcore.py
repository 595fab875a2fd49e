"""q-series primitives.

Finite and infinite q-shifted factorials, terminating basic hypergeometric
sums and the q-numbers ``e_n = (1 - q**n) / (1 - q)``.

Series conventions
------------------
``2phi0`` carries the extra factor ``((-1)**k q**(k(k-1)/2))**-1`` on its k-th
term (the general ``r phi s`` factor with ``s - r + 1 = -1``)::

    2phi0(a, b; q, z) = sum_k (a;q)_k (b;q)_k / (q;q)_k * (-1)**k q**(-k(k-1)/2) z**k

With this choice ``2phi0(q**-1, x; q, q**2/mu) = (mu + q - q*x) / mu``, the
first q-Charlier polynomial.  ``3phi2`` is balanced, so no extra factor::

    3phi2(a1, a2, a3; b1, b2; q, z) = sum_k (a1, a2, a3;q)_k / (q, b1, b2;q)_k z**k
"""

from __future__ import annotations

import math
from numbers import Complex, Integral
from typing import Optional, Sequence

import numpy as np

from .exceptions import DenominatorPoleError, NoTerminationError, QDomainError

__all__ = [
    "DEFAULT_PRODUCT_TOL",
    "check_q",
    "qpochhammer_finite",
    "qpochhammer_infinite",
    "log_qpochhammer",
    "scaled_power",
    "termination_index",
    "phi20_terms",
    "phi20_terminating",
    "phi32_terms",
    "phi32",
    "e_number",
    "e_factorial",
]

DEFAULT_PRODUCT_TOL = 1e-16
TERMINATION_RTOL = 1e-12
UNDERFLOW_THRESHOLD = 1e-250
_MAX_PRODUCT_FACTORS = 100_000


def check_q(q: float) -> float:
    q = float(q)
    if not math.isfinite(q) or not 0.0 < q < 1.0:
        raise QDomainError(f"q outside (0,1): {q!r}")
    return q


def _check_n(n) -> int:
    if not isinstance(n, Integral) or isinstance(n, bool):
        raise TypeError(f"expected a nonnegative integer, got {n!r}")
    if n < 0:
        raise QDomainError(f"negative index: {n}")
    return int(n)


def _check_finite(x: complex, name: str) -> None:
    if not (math.isfinite(x.real) and math.isfinite(x.imag)):
        raise QDomainError(f"{name} must be finite, got {x!r}")


def _as_number(a):
    """Return ``a`` as complex when it is complex-typed, float otherwise."""
    if isinstance(a, complex):
        return complex(a)
    if isinstance(a, Complex) and not isinstance(a, (Integral, float)) and complex(a).imag != 0:
        return complex(a)
    return float(a)


def qpochhammer_finite(a, q: float, n: int):
    """``(a;q)_n``, the product of ``1 - a q**k`` for ``k < n``.

    Exactly 1 for ``n == 0`` and exactly 0 once a factor ``1 - a q**k``
    vanishes.  For ``|result| < 1e-250`` use :func:`log_qpochhammer`.
    """
    q = check_q(q)
    n = _check_n(n)
    a = _as_number(a)
    result = 1.0
    qk = 1.0
    for _ in range(n):
        factor = 1.0 - a * qk
        if factor == 0:
            return 0.0 * result
        result *= factor
        qk *= q
    return result


def qpochhammer_infinite(a, q: float, tol: float = DEFAULT_PRODUCT_TOL):
    """``(a;q)_inf`` truncated once ``|a| q**k / (1 - q) < tol``.

    That quantity bounds ``sum_{j>=k} |a| q**j``, so the omitted factors
    change the product by a relative amount of about ``tol`` at most.
    """
    q = check_q(q)
    if not tol > 0:
        raise QDomainError(f"tol must be positive, got {tol!r}")
    a = _as_number(a)
    _check_finite(complex(a), "a")
    result = 1.0
    term = a
    stop = tol * (1.0 - q)
    for _ in range(_MAX_PRODUCT_FACTORS):
        if abs(term) < stop:
            return result
        factor = 1.0 - term
        if factor == 0:
            return 0.0 * result
        result *= factor
        term *= q
    raise NoTerminationError(f"(a;q)_inf did not reach tol={tol} for a={a!r}, q={q}")


def log_qpochhammer(a, q: float, n: Optional[int] = None, tol: float = DEFAULT_PRODUCT_TOL):
    """Natural log of ``(a;q)_n`` (or ``(a;q)_inf`` when ``n`` is None).

    Real ``a`` with all factors positive gives a real log; otherwise the
    principal complex log of each factor is summed, so the imaginary part
    tracks the phase.  A vanishing factor returns ``-inf``.
    """
    q = check_q(q)
    a = _as_number(a)
    is_complex = isinstance(a, complex)
    parts = []
    term = a
    k = 0
    while True:
        if n is not None:
            if k >= n:
                break
        elif abs(term) < tol:
            break
        elif k >= _MAX_PRODUCT_FACTORS:
            raise NoTerminationError("log (a;q)_inf did not converge")
        factor = 1.0 - term
        if factor == 0:
            return -math.inf
        if not is_complex and factor < 0:
            is_complex = True
        parts.append(factor)
        term *= q
        k += 1
    if not parts:
        return 0.0
    if is_complex:
        logs = np.log(np.asarray(parts, dtype=complex))
        return complex(math.fsum(logs.real), math.fsum(logs.imag))
    return math.fsum(math.log(f) for f in parts)


def scaled_power(x: float, m: int) -> tuple[float, int]:
    """``x**m`` as ``(mantissa, exponent)`` with ``x**m == mantissa * 2**exponent``.

    Binary exponentiation with renormalisation after every multiply, so
    huge ``m`` neither underflows nor loses more than ``O(log m)`` ulps.
    """
    m = _check_n(m)
    negative = x < 0 and m % 2 == 1
    if x == 0:
        return (0.0 if m else 1.0), 0
    mant, exp = math.frexp(abs(float(x)))
    res_m, res_e = 1.0, 0
    while m:
        if m & 1:
            res_m, e = math.frexp(res_m * mant)
            res_e += exp + e
        m >>= 1
        if m:
            mant, e = math.frexp(mant * mant)
            exp = 2 * exp + e
    return (-res_m if negative else res_m), res_e


def termination_index(a, q: float, rtol: float = TERMINATION_RTOL) -> Optional[int]:
    """Return ``n`` if ``a == q**-n`` for a nonnegative integer ``n``, else None.

    Detection uses ``round(log_q a)`` and a relative check at ``rtol``.
    """
    if isinstance(a, Integral) and not isinstance(a, bool):
        a = float(a)
    a = complex(a)
    if a.imag != 0 or a.real <= 0:
        return None
    a = a.real
    if a == 1.0:
        return 0
    n = round(-math.log(a) / math.log(q))
    if n < 0:
        return None
    target = q ** (-n) if n < 1000 else math.inf
    if abs(a - target) <= rtol * abs(target):
        return int(n)
    return None


def _sum_terms(terms: np.ndarray):
    if np.iscomplexobj(terms):
        value = complex(math.fsum(terms.real), math.fsum(terms.imag))
        return value
    return math.fsum(terms)


def phi20_terms(a, b, q: float, z, n_terms: Optional[int] = None) -> np.ndarray:
    """Individual terms of a terminating ``2phi0(a, b; q, z)``.

    ``n_terms`` overrides termination detection (it is the number of terms,
    i.e. termination index + 1); otherwise ``a`` or ``b`` must be of the form
    ``q**-n``.  With both of that form exactly ``min(n, m) + 1`` terms result.
    """
    q = check_q(q)
    a, b, z = _as_number(a), _as_number(b), _as_number(z)
    if n_terms is None:
        idx = [i for i in (termination_index(a, q), termination_index(b, q)) if i is not None]
        if not idx:
            raise NoTerminationError(
                f"2phi0 does not terminate: neither {a!r} nor {b!r} is q**-n"
            )
        n_terms = min(idx) + 1
    n_terms = _check_n(n_terms)
    dtype = complex if any(isinstance(v, complex) for v in (a, b, z)) else float
    terms = np.zeros(n_terms, dtype=dtype)
    term = 1.0
    qk = 1.0
    for k in range(n_terms):
        terms[k] = term
        # ratio of consecutive terms, including the -q**-k sign/power factor
        term = term * (1.0 - a * qk) * (1.0 - b * qk) / (1.0 - qk * q) * (-z / qk)
        qk *= q
    return terms


def phi20_terminating(a, b, q: float, z, n_terms: Optional[int] = None):
    """Terminating ``2phi0(a, b; q, z)`` in the convention of the module docstring."""
    return _sum_terms(phi20_terms(a, b, q, z, n_terms))


def phi32_terms(
    upper: Sequence,
    lower: Sequence,
    q: float,
    z,
    n_terms: Optional[int] = None,
    tol: float = 1e-17,
    max_terms: int = 2000,
) -> np.ndarray:
    """Terms of ``3phi2(upper; lower; q, z)``.

    Terminating when an upper parameter is ``q**-n`` (or ``n_terms`` is
    given); otherwise summed until a term falls below ``tol`` times the
    running magnitude, up to ``max_terms``.

    Raises
    ------
    DenominatorPoleError
        If a lower factor ``1 - b q**k`` vanishes within the summation range.
    NoTerminationError
        If a non-terminating series has not converged within ``max_terms``.
    """
    q = check_q(q)
    if len(upper) != 3 or len(lower) != 2:
        raise ValueError("3phi2 takes three upper and two lower parameters")
    upper = [_as_number(x) for x in upper]
    lower = [_as_number(x) for x in lower]
    z = _as_number(z)
    if n_terms is None:
        idx = [i for i in (termination_index(u, q) for u in upper) if i is not None]
        terminating = bool(idx)
        limit = min(idx) + 1 if idx else max_terms
    else:
        terminating = True
        limit = _check_n(n_terms)
    is_complex = any(isinstance(v, complex) for v in (*upper, *lower, z))
    terms = []
    term = 1.0 + 0j if is_complex else 1.0
    qk = 1.0
    scale = 0.0
    converged = terminating
    for k in range(limit):
        terms.append(term)
        scale = max(scale, abs(term))
        if not terminating and abs(term) < tol * scale and k > 0:
            converged = True
            break
        if k + 1 == limit:
            break
        num = (1.0 - upper[0] * qk) * (1.0 - upper[1] * qk) * (1.0 - upper[2] * qk)
        if num == 0:
            break
        den = (1.0 - qk * q) * (1.0 - lower[0] * qk) * (1.0 - lower[1] * qk)
        if abs(den) <= 1e-14 * max(1.0, abs(lower[0] * qk), abs(lower[1] * qk)):
            raise DenominatorPoleError(
                f"3phi2 lower parameter factor vanishes at k={k}: lower={lower!r}"
            )
        term = term * num / den * z
        qk *= q
    if not converged:
        raise NoTerminationError(f"3phi2 did not converge within {max_terms} terms")
    return np.asarray(terms, dtype=complex if is_complex else float)


def phi32(a1, a2, a3, b1, b2, q: float, z, n_terms: Optional[int] = None, **kwargs):
    """Balanced ``3phi2(a1, a2, a3; b1, b2; q, z)``; see :func:`phi32_terms`."""
    return _sum_terms(phi32_terms((a1, a2, a3), (b1, b2), q, z, n_terms, **kwargs))


def e_number(n: int, q: float) -> float:
    """q-number ``(1 - q**n) / (1 - q)``."""
    q = check_q(q)
    n = _check_n(n)
    return (1.0 - q**n) / (1.0 - q)


def e_factorial(n: int, q: float) -> float:
    """``e_1 e_2 ... e_n`` (1 for ``n == 0``)."""
    q = check_q(q)
    n = _check_n(n)
    result = 1.0
    for k in range(1, n + 1):
        result *= (1.0 - q**k) / (1.0 - q)
    return result
