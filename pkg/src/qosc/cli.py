"""``qosc eval|verify|table``: command-line front end.

Exit codes: 0 success (every check passed), 1 a failed check or a numerical
error, 2 an invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import charlier, coherent, fourier, oscillator
from .exceptions import DenominatorPoleError, QDomainError
from .qcore import e_number
from .verify import SUITE_IDENTITIES, SUITES, RunConfig, run_suites

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def parse_complex(text: str) -> complex:
    """Parse ``i``, ``-i``, ``0.7i``, ``0.3`` or ``1+2j`` style literals."""
    cleaned = text.strip().replace(" ", "").replace("i", "j")
    if cleaned in ("j", "+j"):
        return 1j
    if cleaned == "-j":
        return -1j
    try:
        return complex(cleaned)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _pick_complex(args, name: str, shorthand: Optional[complex], default: complex) -> complex:
    re_ = getattr(args, f"{name}_re")
    im_ = getattr(args, f"{name}_im")
    if shorthand is not None:
        if re_ is not None or im_ is not None:
            raise ConfigError(f"give either --{name} or --{name}-re/--{name}-im, not both")
        return shorthand
    if re_ is None and im_ is None:
        return default
    return complex(re_ or 0.0, im_ or 0.0)


def _config(args) -> RunConfig:
    try:
        return RunConfig(
            q=args.q,
            mu=args.mu,
            n_max=args.n_max,
            s_max=args.s_max,
            tol=args.tol,
            output_format=args.format,
            seed=args.seed,
            timing=args.timing,
        )
    except (QDomainError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


# --- output ------------------------------------------------------------------


def _rows_out(header: Sequence[str], rows, fmt: str, comments: Sequence[str] = ()) -> str:
    if fmt == "json":
        return json.dumps([dict(zip(header, row)) for row in rows], indent=2) + "\n"
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    if fmt == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    else:
        cells = [list(header)] + [[_fmt(v) for v in row] for row in rows]
        widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
        for r in cells:
            buf.write("  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip() + "\n")
    return buf.getvalue()


def _reports_out(reports, fmt: str) -> str:
    if fmt == "json":
        return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=False) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["check_name", "max_residual", "tolerance", "pass", "runtime_ms", "parameters"])
        for r in reports:
            writer.writerow(
                [r.check_name, _fmt(r.max_residual), _fmt(r.tolerance), str(r.passed).lower(),
                 r.runtime_ms, json.dumps(r.parameters, sort_keys=True)]
            )
        return buf.getvalue()
    width = max(len(r.check_name) for r in reports)
    lines = []
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        line = f"{status}  {r.check_name.ljust(width)}  residual={r.max_residual:.3e}  tol={r.tolerance:.1e}"
        if r.runtime_ms:
            line += f"  {r.runtime_ms} ms"
        lines.append(line)
    failed = sum(not r.passed for r in reports)
    lines.append(f"{len(reports) - failed}/{len(reports)} checks passed")
    return "\n".join(lines) + "\n"


# --- commands ------------------------------------------------------------------


def cmd_eval(args) -> tuple[list[str], list[tuple]]:
    cfg = _config(args)
    ctx = cfg.context()
    subject = args.subject
    if subject == "poly":
        n, s = _need(args, "n"), _need(args, "s")
        value = charlier.charlier_explicit(n, s, ctx)
        return ["n", "s", "value"], [(n, s, value)]
    if subject == "weight":
        s = _need(args, "s")
        return ["s", "rho"], [(s, charlier.weight_rho(s, ctx))]
    if subject == "wavefunction":
        n = _need(args, "n")
        psi = oscillator.wavefunction(n, ctx).values
        sites = [args.s] if args.s is not None else range(ctx.size)
        return ["s", "psi"], [(s, psi[s]) for s in sites]
    if subject == "coherent":
        alpha = _pick_complex(args, "alpha", None, 0.0)
        params = coherent.CoherentParams(alpha, ctx)
        try:
            state = coherent.coherent_closed(params)
        except QDomainError as exc:
            print(f"qosc: warning: closed form unavailable ({exc}); using the series form", file=sys.stderr)
            state = coherent.coherent_series(params)
        sites = [args.s] if args.s is not None else range(ctx.size)
        return ["s", "re", "im"], [(s, state.values[s].real, state.values[s].imag) for s in sites]
    if subject == "kernel":
        t = _pick_complex(args, "t", args.t, 1j)
        s, p = _need(args, "s"), _need(args, "p")
        try:
            value = fourier.kernel_closed(t, s, p, ctx)
        except DenominatorPoleError as exc:
            print(f"qosc: warning: closed form unavailable ({exc}); using the series form", file=sys.stderr)
            value = fourier.kernel_series(t, s, p, ctx)
        return ["s", "p", "re", "im"], [(s, p, value.real, value.imag)]
    raise ConfigError(f"unknown eval subject {subject!r}")


def _need(args, name: str) -> int:
    value = getattr(args, name)
    if value is None:
        raise ConfigError(f"--{name} is required for eval {args.subject}")
    return value


def cmd_table(args) -> tuple[list[str], list[tuple], list[str]]:
    cfg = _config(args)
    ctx = cfg.context()
    if args.kind == "spectrum":
        return ["n", "e_n"], [(n, e_number(n, ctx.q)) for n in range(cfg.n_max + 1)], []
    if args.kind == "wavefunctions":
        table = oscillator.wavefunction_table(ctx, cfg.n_max)
        header = ["s"] + [f"psi_{n}" for n in range(cfg.n_max + 1)]
        rows = [(s, *table[:, s]) for s in range(ctx.size)]
        return header, rows, []
    if args.kind == "kernel":
        t = _pick_complex(args, "t", args.t, 1j)
        kernel = fourier.build_kernel(t, ctx)
        header = ["s"]
        for p in range(ctx.size):
            header += [f"re_{p}", f"im_{p}"]
        rows = []
        for s in range(ctx.size):
            row = [s]
            for z in kernel.entries[s]:
                row += [z.real, z.imag]
            rows.append(tuple(row))
        comments = [f"t = {t!r}, q = {ctx.q!r}, mu = {ctx.mu!r}, s_max = {ctx.s_max}"]
        if math.isclose(abs(t), 1.0, rel_tol=0, abs_tol=1e-12):
            margin = fourier.unitarity_margin(t, ctx)
            if margin < ctx.size:
                residual = fourier.unitarity_residual(kernel, margin)
                comments.append(f"unitarity_residual = {_fmt(residual)} (s, s' <= {ctx.s_max - margin})")
            else:
                residual = fourier.unitarity_residual(kernel, 0)
                comments.append(f"unitarity_residual = {_fmt(residual)} (whole lattice; too small for the tail bound)")
        return header, rows, comments
    raise ConfigError(f"unknown table kind {args.kind!r}")


# --- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", type=float, default=0.5, help="deformation parameter in (0,1)")
    common.add_argument("--mu", type=float, default=0.3, help="Charlier parameter in (0,1)")
    common.add_argument("--n-max", type=int, default=20)
    common.add_argument("--s-max", type=int, default=60)
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized spans")
    common.add_argument("--timing", action="store_true", help="record runtime_ms (output no longer byte-stable)")

    parser = argparse.ArgumentParser(prog="qosc", description="q-Charlier oscillator numerics")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("eval", parents=[common], help="evaluate a single quantity")
    ev.add_argument("subject", choices=("poly", "weight", "wavefunction", "coherent", "kernel"))
    ev.add_argument("--n", type=int)
    ev.add_argument("--s", type=int)
    ev.add_argument("--p", type=int)
    _complex_flags(ev, "t")
    _complex_flags(ev, "alpha", shorthand=False)

    ver = sub.add_parser("verify", parents=[common], help="run verification suites")
    ver.add_argument("suite", nargs="?", default="all", choices=("all", *SUITES))
    ver.add_argument("--list", action="store_true", help="print the suite -> identity map")

    tab = sub.add_parser("table", parents=[common], help="emit a CSV table")
    tab.add_argument("kind", choices=("spectrum", "wavefunctions", "kernel"))
    tab.add_argument("--out", help="output path (default: stdout)")
    _complex_flags(tab, "t")
    return parser


def _complex_flags(parser, name: str, shorthand: bool = True) -> None:
    if shorthand:
        parser.add_argument(f"--{name}", type=parse_complex, help="complex value; 'i' for the canonical transform")
    parser.add_argument(f"--{name}-re", type=float)
    parser.add_argument(f"--{name}-im", type=float)


def _write(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            if args.list:
                for name in SUITES:
                    print(f"{name}: {SUITE_IDENTITIES[name]}")
                return EXIT_OK
            cfg = _config(args)
            reports = run_suites(args.suite, cfg)
            sys.stdout.write(_reports_out(reports, cfg.output_format))
            return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL
        if args.command == "eval":
            header, rows = cmd_eval(args)
            sys.stdout.write(_rows_out(header, rows, args.format))
            return EXIT_OK
        header, rows, comments = cmd_table(args)
        fmt = "csv" if args.format == "text" else args.format
        try:
            _write(_rows_out(header, rows, fmt, comments), args.out)
        except OSError as exc:
            if args.out is None:
                return EXIT_FAIL
            print(f"qosc: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
            return EXIT_FAIL
        return EXIT_OK
    except ConfigError as exc:
        print(f"qosc: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, ValueError) as exc:
        print(f"qosc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
