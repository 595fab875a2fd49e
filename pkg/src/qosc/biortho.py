"""3phi2 biorthogonal rational functions.

::

    u_m(s) = 3phi2(q^-m, q^-s, t1; (t1/mu1) q^(1-m), (t1/mu2) q^(1-s); q, q^2/t2)
    v_n(s) = u_n(s) with t1 <-> t2,          t1 t2 = mu1 mu2

    sum_s u_m(s) v_n(s) rho(s) q^-s = d_n^2 delta_mn

    rho(s) = (mu2/t1, mu2/t2; q)_s / (q, mu2; q)_s * mu1^s q^s
    d_n^2  = (t1, t2; q)_inf / (mu1, mu2; q)_inf * (q, mu1; q)_n / (mu1/t1, mu1/t2; q)_n * mu2^-n

The lower parameter ``(t1/mu2) q^(1-s)`` of ``u`` is ``q^(1-s)/a`` with
``a = mu2/t1``, the same ``a`` whose factorial ``(a;q)_s`` sits in the
weight.  When ``a = q^-j`` the weight vanishes for ``s > j`` exactly where
``u`` has poles.  The products ``u_m(s) (mu2/t1;q)_s`` and
``v_n(s) (mu2/t2;q)_s`` are therefore evaluated with the reversal identity::

    (a;q)_s / (q^(1-s)/a; q)_k = (a;q)_(s-k) prod_{i<k} (-a q^(s-1-i))

which cancels the pole against the zero term by term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .charlier import lattice_x
from .exceptions import ConvergenceError, DenominatorPoleError, QDomainError
from .qcore import check_q, phi32_terms, qpochhammer_finite, qpochhammer_infinite

__all__ = [
    "BiorthoParams",
    "BiorthoNorm",
    "REFERENCE_PARAMS",
    "u",
    "v",
    "u_terms",
    "u_weighted",
    "v_weighted",
    "biortho_weight",
    "biortho_norm",
    "weighted_summand",
    "biorthogonality_sum",
    "biorthogonality_residual",
]


@dataclass(frozen=True)
class BiorthoParams:
    q: float
    mu1: float
    mu2: float
    t1: float
    t2: float

    def __post_init__(self):
        check_q(self.q)
        for name in ("mu1", "mu2"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise QDomainError(f"{name} outside (0,1): {value!r}")
        for name in ("t1", "t2"):
            value = getattr(self, name)
            if value == 0 or not math.isfinite(value):
                raise QDomainError(f"{name} must be a nonzero real, got {value!r}")
        target = self.mu1 * self.mu2
        if abs(self.t1 * self.t2 - target) >= 1e-12 * abs(target):
            raise QDomainError(f"t1 t2 = {self.t1 * self.t2!r} must equal mu1 mu2 = {target!r}")

    def swapped(self) -> "BiorthoParams":
        """The same point with ``t1`` and ``t2`` exchanged."""
        return BiorthoParams(self.q, self.mu1, self.mu2, self.t2, self.t1)

    def dual(self) -> "BiorthoParams":
        """The same point with ``mu1`` and ``mu2`` exchanged."""
        return BiorthoParams(self.q, self.mu2, self.mu1, self.t1, self.t2)


REFERENCE_PARAMS = BiorthoParams(q=0.5, mu1=0.3, mu2=0.4, t1=0.2, t2=0.6)


@dataclass(frozen=True)
class BiorthoNorm:
    n: int
    d_squared: float


def u_terms(m: int, s: int, p: BiorthoParams) -> np.ndarray:
    """Terms of ``u_m(s)``; exactly ``min(m, s) + 1`` of them."""
    q = p.q
    return phi32_terms(
        (lattice_x(m, q), lattice_x(s, q), p.t1),
        (p.t1 / p.mu1 * q ** (1 - m), p.t1 / p.mu2 * q ** (1 - s)),
        q,
        q * q / p.t2,
        n_terms=min(m, s) + 1,
    )


def u(m: int, s: int, p: BiorthoParams) -> float:
    """``u_m(s)``; raises :class:`DenominatorPoleError` at a pole."""
    return math.fsum(u_terms(m, s, p))


def v(n: int, s: int, p: BiorthoParams) -> float:
    """``v_n(s) = u_n(s)`` with ``t1`` and ``t2`` exchanged."""
    return u(n, s, p.swapped())


def u_weighted(m: int, s: int, p: BiorthoParams) -> float:
    """``u_m(s) (mu2/t1; q)_s``, finite even where ``u_m(s)`` has a pole.

    Term ``k`` of ``u`` becomes::

        (q^-m, t1; q)_k / (q, (t1/mu1) q^(1-m); q)_k (q^2/t2)^k
            * (a/q)^k (q^(s-k+1); q)_k (a; q)_(s-k),      a = mu2/t1

    where ``(q^-s;q)_k prod_{i<k}(-a q^(s-1-i)) = (a/q)^k (q^(s-k+1);q)_k``.
    """
    if m < 0 or s < 0:
        raise QDomainError("m and s must be nonnegative")
    q = p.q
    a = p.mu2 / p.t1
    lower = p.t1 / p.mu1 * q ** (1 - m)
    z = q * q / p.t2
    terms = []
    coeff = 1.0  # (q^-m, t1; q)_k / (q, lower; q)_k * (z a / q)^k
    for k in range(min(m, s) + 1):
        # (q^(s-k+1); q)_k (a; q)_(s-k)
        tail = qpochhammer_finite(q ** (s - k + 1), q, k) * qpochhammer_finite(a, q, s - k)
        terms.append(coeff * tail)
        if k == min(m, s):
            break
        qk = q**k
        den = (1.0 - q * qk) * (1.0 - lower * qk)
        if abs(den) <= 1e-14:
            raise DenominatorPoleError(f"u_{m}: lower factor (t1/mu1) q^(1-m) vanishes at k={k}")
        coeff *= (1.0 - qk / q**m) * (1.0 - p.t1 * qk) / den * z * a / q
    return math.fsum(terms)


def v_weighted(n: int, s: int, p: BiorthoParams) -> float:
    """``v_n(s) (mu2/t2; q)_s``."""
    return u_weighted(n, s, p.swapped())


def biortho_weight(s: int, p: BiorthoParams) -> float:
    """``rho(s) = (mu2/t1, mu2/t2; q)_s / (q, mu2; q)_s * mu1^s q^s``; may be zero or negative."""
    q = p.q
    num = qpochhammer_finite(p.mu2 / p.t1, q, s) * qpochhammer_finite(p.mu2 / p.t2, q, s)
    den = qpochhammer_finite(q, q, s) * qpochhammer_finite(p.mu2, q, s)
    return num / den * (p.mu1 * q) ** s


def biortho_norm(n: int, p: BiorthoParams) -> BiorthoNorm:
    """``d_n^2``; raises when ``(mu1/t1, mu1/t2; q)_n`` vanishes."""
    q = p.q
    inf_part = (qpochhammer_infinite(p.t1, q) * qpochhammer_infinite(p.t2, q)) / (
        qpochhammer_infinite(p.mu1, q) * qpochhammer_infinite(p.mu2, q)
    )
    den = qpochhammer_finite(p.mu1 / p.t1, q, n) * qpochhammer_finite(p.mu1 / p.t2, q, n)
    if den == 0:
        raise DenominatorPoleError(f"d_{n}^2: (mu1/t1, mu1/t2; q)_{n} vanishes")
    num = qpochhammer_finite(q, q, n) * qpochhammer_finite(p.mu1, q, n)
    return BiorthoNorm(n, inf_part * num / den * p.mu2 ** (-n))


def weighted_summand(m: int, n: int, s: int, p: BiorthoParams) -> float:
    """``u_m(s) v_n(s) rho(s) q^-s`` in pole-free form."""
    q = p.q
    base = p.mu1**s / (qpochhammer_finite(q, q, s) * qpochhammer_finite(p.mu2, q, s))
    return u_weighted(m, s, p) * v_weighted(n, s, p) * base


def biorthogonality_sum(
    m: int, n: int, p: BiorthoParams, decay: float = 1e-15, horizon: int = 500
) -> float:
    """``sum_s u_m(s) v_n(s) rho(s) q^-s``, truncated once the tail is negligible.

    Summation stops when ten consecutive summands fall below ``1e-17`` times
    the running magnitude.  The bare weight series ``rho(s) q^-s`` must
    decay below ``decay`` within ``horizon`` sites, otherwise
    :class:`ConvergenceError` is raised.
    """
    q = p.q
    for s in range(horizon):
        if abs(biortho_weight(s, p) * q ** (-s)) < decay:
            break
    else:
        raise ConvergenceError(f"weight series does not decay below {decay} within {horizon} sites")
    terms = []
    quiet = 0
    for s in range(10 * horizon):
        term = weighted_summand(m, n, s, p)
        terms.append(term)
        scale = max(abs(x) for x in terms)
        quiet = quiet + 1 if abs(term) < 1e-17 * max(scale, 1e-300) else 0
        if s > max(m, n) and quiet >= 10:
            return math.fsum(terms)
    raise ConvergenceError("biorthogonality sum did not converge")


def biorthogonality_residual(m: int, n: int, p: BiorthoParams) -> float:
    """``|sum - d_n^2 delta_mn| / max(1, |d_n^2|)``."""
    if m < 0 or n < 0:
        raise QDomainError("m and n must be nonnegative")
    total = biorthogonality_sum(m, n, p)
    d2 = biortho_norm(n, p).d_squared
    target = d2 if m == n else 0.0
    return abs(total - target) / max(1.0, abs(d2))
