"""Verification suites: each check evaluates an identity two ways and reports the worst residual."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import gmpy2
import numpy as np

from . import biortho, charlier, coherent, fourier, oscillator
from .charlier import QContext
from .exceptions import QDomainError
from .qcore import e_number

__all__ = [
    "RunConfig",
    "VerificationReport",
    "SUITES",
    "SUITE_IDENTITIES",
    "UNITARITY_SWEEP",
    "UNITARITY_BLOCK",
    "COHERENT_SAMPLE",
    "run_suite",
    "run_suites",
]


@dataclass(frozen=True)
class RunConfig:
    q: float = 0.5
    mu: float = 0.3
    n_max: int = 20
    s_max: int = 60
    tol: float = 1e-10
    output_format: str = "text"
    seed: int = 0
    timing: bool = False

    def __post_init__(self):
        # QContext carries the numeric validation
        self.context()
        if isinstance(self.n_max, bool) or int(self.n_max) != self.n_max or self.n_max < 0:
            raise QDomainError(f"n_max must be a nonnegative integer, got {self.n_max!r}")
        if self.output_format not in ("text", "json", "csv"):
            raise ValueError(f"unknown output format {self.output_format!r}")

    def context(self) -> QContext:
        return QContext(self.q, self.mu, self.s_max, self.tol)


@dataclass(frozen=True)
class VerificationReport:
    check_name: str
    parameters: dict = field(default_factory=dict)
    max_residual: float = 0.0
    tolerance: float = 0.0
    runtime_ms: int = 0

    @property
    def passed(self) -> bool:
        return bool(self.max_residual < self.tolerance)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["pass"] = self.passed
        return {k: out[k] for k in ("check_name", "parameters", "max_residual", "tolerance", "pass", "runtime_ms")}


# Fixed points used by suites whose parameters are not taken from the config.
COHERENT_SAMPLE = (
    0.0, 0.3, -0.45, 0.2j, 0.3 + 0.4j, -0.5 + 0.5j, 0.7 - 0.2j, -0.6j, 0.8 + 0.3j, -0.9 - 0.4j,
)
GENERATING_POINTS = ((0.4, 3), (0.1, 0), (-0.25, 5), (0.3j, 2), (0.2 - 0.2j, 7))
BILINEAR_POINTS = (
    (0.3, 0.3, 1, 2, 0.4),
    (0.3, 0.5, 3, 3, 0.2),
    (0.6, 0.4, 0, 4, -0.3),
    (0.3, 0.3, 4, 1, 0.5j),
    (0.5, 0.7, 2, 5, 0.1 + 0.2j),
)
KERNEL_TS = (0.3, 0.7j, 1j, -1j)
UNITARITY_SWEEP = (40, 50, 60)
UNITARITY_BLOCK = 30
DIFFFORM_S_MAX = 30
LIMIT_POINT = (3, 4, 1.5)
LIMIT_QS = (0.9, 0.99, 0.999)
BIORTHO_GENERIC = biortho.BiorthoParams(q=0.5, mu1=0.3, mu2=0.4, t1=0.25, t2=0.48)

SUITE_IDENTITIES = {
    "orthogonality": "sum_s c_m c_n rho(s) q^-s = delta_mn (q;q)_n / mu^n; <psi_m, psi_n> = delta_mn; "
    "2phi0 form of c_n = three-term recurrence",
    "pearson": "sigma(s+1) rho(s+1) = mu rho(s); rho in both product forms",
    "ladder": "a psi_n = e_n^1/2 psi_{n-1}; a+ psi_n = e_{n+1}^1/2 psi_{n+1}; <a f, g> = <f, a+ g>; "
    "ladder action = difference-differentiation formulas",
    "hamiltonian": "a+ a psi_n = e_n psi_n; a+ a = closed three-term H",
    "commutator": "a a+ - q a+ a = 1; [a, a+] psi_n = q^n psi_n; N psi_n = n psi_n with "
    "n = log_q(1 - (1-q) e_n); [a, N] = a; [N, a+] = a+",
    "diffform": "mu q^s Delta c_n = (q^n - 1) c_{n-1}; q^s Nabla[rho c_n] = rho c_{n+1}",
    "generating": "sum_n t^n c_n / (q;q)_n = (q t x/mu; q)_inf / (t, q t/mu; q)_inf; "
    "bilinear sum = product * 3phi2",
    "coherent": "a |alpha> = alpha |alpha>; <alpha|alpha> = 1; series = product form; overlap formula",
    "kernel": "sum_n t^n psi_n(s) psi_n(p) = closed 3phi2 kernel; K(s,p) = K(p,s)",
    "transform": "K_i psi_m = i^m psi_m; K_i^4 = 1",
    "unitarity": "sum_p K_t(s,p) conj(K_t(s',p)) = delta_ss' for |t| = 1",
    "limit": "c_n^{(1-q) mu}(q^-s | q) -> 2F0(-n, -s; -1/mu) as q -> 1",
    "biortho": "sum_s u_m v_n rho q^-s = d_n^2 delta_mn; u_m(s) = u_s(m) with mu1 <-> mu2",
}


def _rng(config: RunConfig, salt: int) -> np.random.Generator:
    return np.random.default_rng([config.seed, salt])


def _report(name: str, residual: float, tol: float, **params) -> VerificationReport:
    return VerificationReport(name, params, float(residual), float(tol))


# --- suites ----------------------------------------------------------------------


def _suite_orthogonality(cfg: RunConfig) -> list[VerificationReport]:
    ctx = cfg.context()
    n = cfg.n_max
    table = oscillator.wavefunction_table(ctx, n)
    gram = table @ table.T
    psi_res = np.max(np.abs(gram - np.eye(n + 1)))

    # Polynomial side: exact recurrence values, scaled by sqrt(rho q^-s) / d_n in log space
    rows = np.zeros((n + 1, ctx.size))
    log_d = [0.5 * math.log(oscillator.norm_constant(k, ctx).d_squared) for k in range(n + 1)]
    for s in range(ctx.size):
        values = charlier.charlier_recurrence_table(n, charlier.LatticePoint.at(s, ctx.q), ctx)
        log_w = 0.5 * charlier.log_weight_rho(s, ctx) - 0.5 * s * math.log(ctx.q)
        for k, c in enumerate(values):
            if c != 0:
                mag = float(gmpy2.log(abs(c))) + log_w - log_d[k]
                rows[k, s] = math.exp(mag) if c > 0 else -math.exp(mag)
    poly_res = np.max(np.abs(rows @ rows.T - np.eye(n + 1)))

    mass = math.fsum(charlier.weight_rho(s, ctx) * ctx.q ** (-s) for s in range(ctx.size))
    positive = all(charlier.weight_rho_scaled(s, ctx)[0] > 0 for s in range(ctx.size))

    rng = _rng(cfg, 2)
    worst = 0.0
    pairs = []
    for _ in range(5):
        q = float(rng.uniform(0.2, 0.8))
        mu = float(rng.uniform(0.1, 0.9))
        pairs.append([q, mu])
        pctx = QContext(q, mu, 30)
        for s in range(31):
            exact = charlier.charlier_recurrence_table(30, charlier.LatticePoint.at(s, q), pctx)
            for k in range(31):
                # scaled: c_k(q^-s) exceeds the double range for small q
                mant, exp = charlier.charlier_explicit_scaled(k, s, pctx)
                got = gmpy2.mul_2exp(gmpy2.mpfr(mant), exp)
                ref = exact[k]
                worst = max(worst, float(abs(got - ref) / abs(ref)))
    return [
        _report("orthogonality.wavefunctions", psi_res, 1e-9, n_max=n, s_max=ctx.s_max),
        _report("orthogonality.polynomials", poly_res, 1e-9, n_max=n, s_max=ctx.s_max),
        _report("orthogonality.total_mass", abs(mass - 1.0), 1e-12, s_max=ctx.s_max),
        _report("orthogonality.weight_positive", 0.0 if positive else 1.0, 0.5, s_max=ctx.s_max),
        _report("orthogonality.explicit_vs_recurrence", worst, cfg.tol, n_max=30, s_max=30, q_mu=pairs),
    ]


def _suite_pearson(cfg: RunConfig) -> list[VerificationReport]:
    ctx = cfg.context()
    res = max(abs(charlier.pearson_residual(s, ctx)) for s in range(ctx.size))
    forms = 0.0
    for s in range(ctx.size):
        a = charlier.weight_rho(s, ctx)
        b = charlier.weight_rho_product_form(s, ctx)
        if a > 0:
            forms = max(forms, abs(a - b) / a)
    return [
        _report("pearson.relation", res, 1e-12, s_max=ctx.s_max, units="rho(s)"),
        _report("pearson.weight_forms", forms, 1e-12, s_max=ctx.s_max),
    ]


def _suite_ladder(cfg: RunConfig) -> list[VerificationReport]:
    ctx = cfg.context()
    q = ctx.q
    table = oscillator.wavefunction_table(ctx, cfg.n_max + 1)
    psi = [oscillator.GridFunction(ctx, row) for row in table]
    lower = raise_ = 0.0
    eq_lower = eq_raise = 0.0
    for n in range(cfg.n_max + 1):
        a_psi = oscillator.apply_annihilation(psi[n])
        target = psi[n - 1] * math.sqrt(e_number(n, q)) if n else oscillator.GridFunction.zeros(ctx)
        lower = max(lower, (a_psi - target).sup_norm())
        ap_psi = oscillator.apply_creation(psi[n])
        raise_ = max(raise_, (ap_psi - psi[n + 1] * math.sqrt(e_number(n + 1, q))).sup_norm())
        if n >= 1:
            eq_lower = max(eq_lower, (oscillator.lowering_path(n, ctx) - a_psi).sup_norm())
        eq_raise = max(eq_raise, (oscillator.raising_path(n, ctx) - ap_psi).sup_norm())

    rng = _rng(cfg, 3)
    adj = 0.0
    for _ in range(5):
        f = oscillator.span_combination(rng.normal(size=11) + 1j * rng.normal(size=11), ctx)
        g = oscillator.span_combination(rng.normal(size=11) + 1j * rng.normal(size=11), ctx)
        lhs = oscillator.inner_product(oscillator.apply_annihilation(f), g)
        rhs = oscillator.inner_product(f, oscillator.apply_creation(g))
        adj = max(adj, abs(lhs - rhs))

    ground = max(
        (oscillator.create_from_ground(n, ctx) - psi[n]).sup_norm() for n in range(cfg.n_max + 1)
    )
    return [
        _report("ladder.annihilation", lower, cfg.tol, n_max=cfg.n_max),
        _report("ladder.creation", raise_, cfg.tol, n_max=cfg.n_max),
        _report("ladder.adjoint", adj, cfg.tol, span=10, samples=5),
        _report("ladder.create_from_ground", ground, cfg.tol, n_max=cfg.n_max),
        _report("ladder.lowering_equivalence", eq_lower, 1e-12, n_max=cfg.n_max),
        _report("ladder.raising_equivalence", eq_raise, 1e-12, n_max=cfg.n_max),
    ]


def _suite_hamiltonian(cfg: RunConfig) -> list[VerificationReport]:
    ctx = cfg.context()
    table = oscillator.wavefunction_table(ctx, cfg.n_max)
    spec = 0.0
    for n, row in enumerate(table):
        f = oscillator.GridFunction(ctx, row)
        spec = max(spec, (oscillator.apply_hamiltonian(f) - f * e_number(n, ctx.q)).sup_norm())
    rng = _rng(cfg, 5)
    direct = 0.0
    for _ in range(10):
        f = oscillator.GridFunction(ctx, rng.uniform(-1, 1, ctx.size))
        direct = max(direct, (oscillator.apply_hamiltonian(f) - oscillator.hamiltonian_direct(f)).sup_norm())
    return [
        _report("hamiltonian.spectrum", spec, cfg.tol, n_max=cfg.n_max),
        _report("hamiltonian.direct_form", direct, 1e-12, samples=10),
    ]


def _suite_commutator(cfg: RunConfig) -> list[VerificationReport]:
    ctx = cfg.context()
    rng = _rng(cfg, 6)
    qcomm = 0.0
    for _ in range(10):
        f = oscillator.span_combination(rng.normal(size=16), ctx)
        qcomm = max(qcomm, oscillator.q_commutator_residual(f).sup_norm() / f.sup_norm())
    table = oscillator.wavefunction_table(ctx, 15)
    plain = 0.0
    for n, row in enumerate(table):
        f = oscillator.GridFunction(ctx, row)
        plain = max(plain, (oscillator.apply_commutator(f) - f * ctx.q**n).sup_norm())
    eig = max(oscillator.number_operator_eigencheck(n, ctx) for n in range(cfg.n_max + 1))
    num = 0.0
    for _ in range(5):
        f = oscillator.span_combination(rng.normal(size=11), ctx)
        num = max(num, *oscillator.number_commutator_residuals(f, n_cap=cfg.n_max))
    return [
        _report("commutator.q_commutator", qcomm, cfg.tol, span=15, samples=10),
        _report("commutator.plain", plain, cfg.tol, n_max=15),
        _report("commutator.number_eigencheck", eig, cfg.tol, n_max=cfg.n_max),
        _report("commutator.number_ladder", num, cfg.tol, span=10, samples=5),
    ]


def _suite_diffform(cfg: RunConfig) -> list[VerificationReport]:
    ctx = cfg.context()
    # polynomial values grow like q^(-n s); s <= 30 keeps c_{n+1} inside double range
    top = min(DIFFFORM_S_MAX, ctx.s_max - 1)
    lower = max(
        charlier.diff_lowering_residual(n, s, ctx) for n in range(1, cfg.n_max + 1) for s in range(top + 1)
    )
    raise_ = max(
        charlier.diff_raising_residual(n, s, ctx) for n in range(cfg.n_max + 1) for s in range(top + 1)
    )
    return [
        _report("diffform.lowering", lower, cfg.tol, n_max=cfg.n_max, s_max=top, relative=True),
        _report("diffform.raising", raise_, cfg.tol, n_max=cfg.n_max, s_max=top, relative=True),
    ]


def _suite_generating(cfg: RunConfig) -> list[VerificationReport]:
    ctx = cfg.context()
    gen = 0.0
    for t, s in GENERATING_POINTS:
        a = coherent.generating_function_closed(t, s, ctx)
        b = coherent.generating_function_partial(t, s, ctx)
        gen = max(gen, abs(a - b) / abs(a))
    bil = 0.0
    for mu1, mu2, s, p, t in BILINEAR_POINTS:
        q = ctx.q
        a = fourier.bilinear_generating(mu1, mu2, charlier.lattice_x(s, q), charlier.lattice_x(p, q), t, q)
        b = fourier.bilinear_partial(mu1, mu2, s, p, t, q)
        bil = max(bil, abs(a - b) / abs(a))
    return [
        _report("generating.single", gen, 1e-9, points=len(GENERATING_POINTS)),
        _report("generating.bilinear", bil, 1e-9, points=len(BILINEAR_POINTS)),
    ]


def _suite_coherent(cfg: RunConfig) -> list[VerificationReport]:
    # the states decay like ((1-q)^(1/2) |alpha|)^s, so the lattice is widened
    ctx = cfg.context().with_(s_max=max(cfg.s_max, 120))
    eig = norm = agree = 0.0
    states = {}
    for alpha in COHERENT_SAMPLE:
        p = coherent.CoherentParams(alpha, ctx)
        series = coherent.coherent_series(p)
        closed = coherent.coherent_closed(p)
        states[alpha] = series
        eig = max(eig, (oscillator.apply_annihilation(series) - series * p.alpha).sup_norm())
        norm = max(norm, abs(oscillator.inner_product(series, series) - 1.0))
        agree = max(agree, (series - closed).sup_norm() / closed.sup_norm())
    overlap = modulus = 0.0
    for a in COHERENT_SAMPLE:
        for b in COHERENT_SAMPLE:
            expected = coherent.coherent_overlap(a, b, ctx)
            overlap = max(overlap, abs(oscillator.inner_product(states[b], states[a]) - expected))
            modulus = max(modulus, abs(expected) - 1.0)
    sample = [[z.real, z.imag] for z in map(complex, COHERENT_SAMPLE)]
    return [
        _report("coherent.eigenvector", eig, 1e-8, s_max=ctx.s_max, alpha=sample),
        _report("coherent.normalization", norm, 1e-8, s_max=ctx.s_max),
        _report("coherent.series_vs_closed", agree, 1e-9, s_max=ctx.s_max),
        _report("coherent.overlap", overlap, 1e-8, pairs=len(COHERENT_SAMPLE) ** 2),
        _report("coherent.overlap_modulus", max(modulus, 0.0), 1e-12),
    ]


def _suite_kernel(cfg: RunConfig) -> list[VerificationReport]:
    ctx = cfg.context()
    block = min(12, ctx.s_max)
    worst = 0.0
    for t in KERNEL_TS:
        series = fourier.kernel_series_matrix(t, ctx)[: block + 1, : block + 1]
        closed = np.array([[fourier.kernel_closed(t, s, p, ctx) for p in range(block + 1)] for s in range(block + 1)])
        worst = max(worst, np.max(np.abs(series - closed)) / np.max(np.abs(series)))
    kernel = fourier.build_kernel(1j, ctx)
    sym = float(np.max(np.abs(kernel.entries - kernel.entries.T)))
    return [
        _report("kernel.series_vs_closed", worst, 1e-9, t=[[complex(t).real, complex(t).imag] for t in KERNEL_TS], block=block),
        _report("kernel.symmetry", sym, 1e-15, t=[0.0, 1.0]),
    ]


def _suite_transform(cfg: RunConfig) -> list[VerificationReport]:
    ctx = cfg.context()
    kernel = fourier.build_kernel(1j, ctx)
    table = oscillator.wavefunction_table(ctx, 10)
    eig = 0.0
    for m, row in enumerate(table):
        f = oscillator.GridFunction(ctx, row)
        eig = max(eig, (fourier.apply_transform(kernel, f) - f * (1j**m)).sup_norm())
    rng = _rng(cfg, 11)
    fourth = 0.0
    for _ in range(5):
        f = oscillator.span_combination(rng.normal(size=9) + 1j * rng.normal(size=9), ctx)
        g = f
        for _ in range(4):
            g = fourier.apply_transform(kernel, g)
        fourth = max(fourth, (g - f).sup_norm())
    return [
        _report("transform.eigenfunctions", eig, 1e-8, m_max=10),
        _report("transform.fourth_power", fourth, 1e-7, span=8, samples=5),
    ]


def _suite_unitarity(cfg: RunConfig) -> list[VerificationReport]:
    ctx = cfg.context()
    margin = fourier.unitarity_margin(1j, ctx)
    res = fourier.unitarity_residual(fourier.build_kernel(1j, ctx), margin)
    ident = fourier.build_kernel(1.0, ctx, method="series").entries
    completeness = float(np.max(np.abs(ident - np.eye(ctx.size))))
    sweep = []
    for s_max in UNITARITY_SWEEP:
        kernel = fourier.build_kernel(1j, ctx.with_(s_max=s_max))
        sweep.append(fourier.unitarity_residual(kernel, s_max - UNITARITY_BLOCK))
    ratio = max(b / a for a, b in zip(sweep, sweep[1:]))
    return [
        _report("unitarity.interior", res, 1e-8, s_max=ctx.s_max, margin=margin),
        _report("unitarity.completeness_t1", completeness, 1e-8, s_max=ctx.s_max),
        _report(
            "unitarity.sweep_decreasing",
            ratio,
            1.0,
            block=UNITARITY_BLOCK,
            s_max=list(UNITARITY_SWEEP),
            residuals=sweep,
        ),
    ]


def _suite_limit(cfg: RunConfig) -> list[VerificationReport]:
    n, s, mu = LIMIT_POINT
    classical = charlier.charlier_classical(n, s, mu)
    errors = []
    for q in LIMIT_QS:
        ctx = QContext(q, (1.0 - q) * mu, max(s, 1))
        errors.append(abs(charlier.charlier_explicit(n, s, ctx) - classical))
    ratio = max(b / a for a, b in zip(errors, errors[1:]))
    return [
        _report("limit.decreasing", ratio, 1.0, n=n, s=s, mu=mu, q=list(LIMIT_QS), errors=errors),
    ]


def _suite_biortho(cfg: RunConfig) -> list[VerificationReport]:
    p = biortho.REFERENCE_PARAMS
    res = max(biortho.biorthogonality_residual(m, n, p) for m in range(9) for n in range(9))
    g = BIORTHO_GENERIC
    # self-duality read as u_m(s; mu1, mu2) = u_s(m; mu2, mu1); an interpretation,
    # checked at a generic point because u has poles at the reference point
    dual = 0.0
    for m in range(7):
        for s in range(7):
            a = biortho.u(m, s, g)
            b = biortho.u(s, m, g.dual())
            dual = max(dual, abs(a - b) / max(abs(a), 1.0))
    counts = sum(
        len(biortho.u_terms(m, s, g)) != min(m, s) + 1 for m in range(9) for s in range(9)
    )
    params = asdict(p)
    return [
        _report("biortho.biorthogonality", res, 1e-8, m_max=8, n_max=8, **params),
        _report("biortho.self_duality", dual, cfg.tol, m_max=6, s_max=6, **asdict(g)),
        _report("biortho.termination", counts, 0.5, m_max=8, s_max=8),
    ]


SUITES: dict[str, Callable[[RunConfig], list[VerificationReport]]] = {
    "orthogonality": _suite_orthogonality,
    "pearson": _suite_pearson,
    "ladder": _suite_ladder,
    "hamiltonian": _suite_hamiltonian,
    "commutator": _suite_commutator,
    "diffform": _suite_diffform,
    "generating": _suite_generating,
    "coherent": _suite_coherent,
    "kernel": _suite_kernel,
    "transform": _suite_transform,
    "unitarity": _suite_unitarity,
    "limit": _suite_limit,
    "biortho": _suite_biortho,
}


def run_suite(name: str, cfg: RunConfig) -> list[VerificationReport]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}")
    start = time.perf_counter()
    reports = SUITES[name](cfg)
    if cfg.timing:
        ms = int(round((time.perf_counter() - start) * 1000))
        reports = [VerificationReport(r.check_name, r.parameters, r.max_residual, r.tolerance, ms) for r in reports]
    return reports


def _thread_count() -> int:
    raw = os.environ.get("QOSC_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return min(len(SUITES), os.cpu_count() or 1)


def run_suites(names, cfg: RunConfig) -> list[VerificationReport]:
    """Run suites concurrently; reports come back sorted by ``check_name``."""
    if isinstance(names, str):
        names = [names]
    names = list(SUITES) if names == ["all"] else list(names)
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}")
    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        batches = list(pool.map(lambda n: run_suite(n, cfg), names))
    reports = [r for batch in batches for r in batch]
    return sorted(reports, key=lambda r: r.check_name)
