"""Batch command-line surface over the whole package.

Eight subcommands: kloosterman and weyl stream cumulative partial sums,
trace and surface evaluate single trace reports, cm computes traces of
singular moduli, scan sweeps discriminant ranges (the only parallel path:
a process pool over fixed D-chunks with ordered reduction), verify runs
the consistency suites, and phiplus checks the Eisenstein coefficient
series against its closed form.

Output is CSV or JSON (--format, alias --emit), to stdout or --out. Every
floating number is printed with 15 significant digits and artifacts carry
a provenance header, so identical invocations are byte-identical across
runs and across worker counts. Validation errors exit 2, computation
errors exit 1.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from . import report
from .errors import AccuracyError, DomainError
from .geodesics import QuadratureSpec, TraceReport, asymptotic_scan, surface_trace, trace_cycle
from .kloosterman import (
    KloostermanFamily,
    WeylFamily,
    partial_sum_stream,
    s_plus_table,
    weil_bound,
    weyl_sum,
    weyl_via_kohnen,
)
from .modforms import cm_trace, cm_trace_integer_defect, resolve_cache_dir
from .ntheory import WEIGHT_MINUS, WEIGHT_PLUS, Weight, fundamental_discriminants
from .quadforms import GenusCharacterSpec
from .spectral import PhiPlusQuery, phi_plus_closed, phi_plus_series, phi_plus_tail, vanishing_check

# The Kohnen-identity verification grid: both orders of each fundamental
# factorization, positive and negative discriminants.
KOHNEN_PAIRS = ((1, 5), (5, 1), (1, 13), (13, 1), (-3, -7), (-7, -3))
KOHNEN_M_MAX = 4
KOHNEN_C_MAX = 400

SCAN_CHUNK = 8  # D-values per pool task; fixed so output ignores --workers


def _weight(k: float) -> Weight:
    if k == 0.5:
        return WEIGHT_PLUS
    if k == -0.5:
        return WEIGHT_MINUS
    raise DomainError(f"weight must be 0.5 or -0.5, got {k}")


def _emit(
    args: argparse.Namespace,
    prov: Mapping[str, str],
    csv_headers: Sequence[str],
    csv_rows: Iterable[Sequence[object]],
    json_payload: object,
) -> None:
    """Route one artifact to stdout or --out in the selected format.

    CSV rows stream incrementally (an interrupted run leaves a valid
    prefix); JSON is materialized and, when written to a file, replaced
    atomically."""
    if args.format == "csv":
        lines = report.csv_lines(csv_headers, csv_rows, prov)
        if args.out:
            Path(args.out).parent.mkdir(parents=True, exist_ok=True)
            with open(args.out, "w") as handle:
                report.stream_lines(lines, handle)
        else:
            report.stream_lines(lines, sys.stdout)
        return
    text = report.json_text(json_payload, prov)
    if args.out:
        report.atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)


def _maybe_plot_stream(args: argparse.Namespace, rows: list[tuple[float, float, float]], title: str) -> None:
    if getattr(args, "plot", None):
        from . import plots

        plots.plot_stream(rows, args.plot, title)


# ---------------------------------------------------------------------------
# Stream subcommands


def _cmd_kloosterman(args: argparse.Namespace) -> int:
    family = KloostermanFamily(_weight(args.k), args.m, args.n)
    mode = args.weight_mode or family.default_weight_mode()
    prov = report.provenance(
        "kloosterman",
        {
            "k": args.k,
            "m": args.m,
            "n": args.n,
            "cmax": args.cmax,
            "weight_mode": mode,
            "fast": args.fast,
        },
    )
    rows: list[tuple[float, float, float]] = []
    for rec in partial_sum_stream(family, args.cmax, mode, fast=args.fast):
        rows.append((rec.x, rec.term, rec.value))
    _emit(
        args,
        prov,
        ("c", "term", "cumulative"),
        ((int(x), t, v) for x, t, v in rows),
        {
            "query": family.describe(),
            "weight_mode": mode,
            "records": [{"c": int(x), "term": t, "cumulative": v} for x, t, v in rows],
        },
    )
    _maybe_plot_stream(args, rows, family.describe())
    return 0


def _cmd_weyl(args: argparse.Namespace) -> int:
    spec = GenusCharacterSpec.from_divisor(args.D, args.d)
    family = WeylFamily(args.m, spec)
    mode = args.weight_mode or family.default_weight_mode()
    prov = report.provenance(
        "weyl",
        {"D": args.D, "d": args.d, "m": args.m, "cmax": args.cmax, "weight_mode": mode},
    )
    rows: list[tuple[float, float, float]] = []
    for rec in partial_sum_stream(family, args.cmax, mode):
        rows.append((rec.x, rec.term, rec.value))
    _emit(
        args,
        prov,
        ("c", "term", "cumulative"),
        ((int(x), t, v) for x, t, v in rows),
        {
            "query": family.describe(),
            "weight_mode": mode,
            "records": [{"c": int(x), "term": t, "cumulative": v} for x, t, v in rows],
        },
    )
    _maybe_plot_stream(args, rows, family.describe())
    return 0


# ---------------------------------------------------------------------------
# Single-report subcommands

TRACE_COLUMNS = (
    "D",
    "d",
    "m",
    "method",
    "value",
    "main_term",
    "residual",
    "cutoff_or_tol",
    "tail_estimate",
)


def _report_row(rep: TraceReport) -> tuple[object, ...]:
    tail = "" if rep.tail_estimate is None else rep.tail_estimate
    return (
        rep.D,
        rep.d,
        rep.m,
        rep.method,
        rep.value,
        rep.main_term,
        rep.residual,
        rep.cutoff_or_tol,
        tail,
    )


def _report_payload(rep: TraceReport) -> dict[str, object]:
    out: dict[str, object] = {
        "D": rep.D,
        "d": rep.d,
        "m": rep.m,
        "method": rep.method,
        "value": rep.value,
        "main_term": rep.main_term,
        "residual": rep.residual,
        "cutoff_or_tol": rep.cutoff_or_tol,
    }
    if rep.tail_estimate is not None:
        out["tail_estimate"] = rep.tail_estimate
    return out


def _cmd_trace(args: argparse.Namespace) -> int:
    quad = QuadratureSpec(abs_tol=args.tol) if args.tol else None
    rep = trace_cycle(
        args.D,
        args.d,
        args.m,
        method=args.method,
        X=args.X,
        quad=quad,
        cache_dir=args.cache_dir,
    )
    prov = report.provenance(
        "trace",
        {"D": args.D, "d": args.d, "m": args.m, "method": args.method, "X": args.X, "tol": args.tol},
    )
    _emit(args, prov, TRACE_COLUMNS, [_report_row(rep)], _report_payload(rep))
    return 0


def _cmd_surface(args: argparse.Namespace) -> int:
    rep = surface_trace(
        args.D,
        args.d,
        args.m,
        method=args.method,
        X=args.X,
        tol=args.tol,
        cache_dir=args.cache_dir,
    )
    prov = report.provenance(
        "surface",
        {"D": args.D, "d": args.d, "m": args.m, "method": args.method, "X": args.X, "tol": args.tol},
    )
    _emit(args, prov, TRACE_COLUMNS, [_report_row(rep)], _report_payload(rep))
    return 0


def _cmd_cm(args: argparse.Namespace) -> int:
    value = cm_trace(args.d, args.m, mode=args.mode, tol=args.tol, cache_dir=args.cache_dir)
    defect = cm_trace_integer_defect(args.d, args.m, cache_dir=args.cache_dir)
    prov = report.provenance(
        "cm", {"d": args.d, "m": args.m, "mode": args.mode, "tol": args.tol}
    )
    payload = {
        "d": args.d,
        "m": args.m,
        "trace": value,
        "nearest_integer": int(round(value)),
        "integer_defect": defect,
    }
    _emit(
        args,
        prov,
        ("d", "m", "trace", "nearest_integer", "integer_defect"),
        [(args.d, args.m, value, int(round(value)), defect)],
        payload,
    )
    return 0


def _cmd_phiplus(args: argparse.Namespace) -> int:
    s = complex(args.s_re, args.s_im)
    q = PhiPlusQuery(n=args.n, s=s, X=args.X)
    series = phi_plus_series(q)
    closed = phi_plus_closed(args.n, s)
    tail = phi_plus_tail(q)
    diff = abs(series - closed)
    payload = {
        "n": args.n,
        "s_re": s.real,
        "s_im": s.imag,
        "X": float(args.X),
        "series_re": series.real,
        "series_im": series.imag,
        "closed_re": closed.real,
        "closed_im": closed.imag,
        "abs_diff": diff,
        "tail_bound": tail,
        "pass": diff <= tail,
    }
    prov = report.provenance(
        "phiplus", {"n": args.n, "s_re": s.real, "s_im": s.imag, "X": args.X}
    )
    headers = tuple(payload)
    _emit(args, prov, headers, [tuple(payload[h] for h in headers)], payload)
    return 0


# ---------------------------------------------------------------------------
# Discriminant scan (the only parallel path)

SCAN_COLUMNS = (
    "D",
    "d",
    "m",
    "method",
    "value",
    "main_term",
    "residual",
    "cutoff_or_tol",
    "tail_estimate",
    "tail_fluctuation",
    "residual_over_main",
    "residual_over_Dpow",
)


def _scan_chunk(payload: tuple[list[int], int, int, float]) -> list[dict]:
    ds, m, d, X = payload
    return asymptotic_scan(ds, m=m, d=d, X=X)


def _scan_rows(args: argparse.Namespace) -> Iterator[dict]:
    targets = [D for D in fundamental_discriminants(args.D_start, args.D_end) if D % 2]
    chunks = [targets[i : i + SCAN_CHUNK] for i in range(0, len(targets), SCAN_CHUNK)]
    payloads = [(chunk, args.m, args.d, args.X) for chunk in chunks]
    if args.workers > 1 and len(chunks) > 1:
        # executor.map preserves submission order, so the reduction is
        # ordered and the output independent of scheduling.
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            for rows in pool.map(_scan_chunk, payloads):
                yield from rows
    else:
        for payload in payloads:
            yield from _scan_chunk(payload)


def _cmd_scan(args: argparse.Namespace) -> int:
    prov = report.provenance(
        "scan",
        {
            "D_start": args.D_start,
            "D_end": args.D_end,
            "d": args.d,
            "m": args.m,
            "X": args.X,
        },
    )
    collected: list[dict] = []

    def csv_rows() -> Iterator[tuple[object, ...]]:
        for row in _scan_rows(args):
            collected.append(row)
            if "error" in row:
                note = "error:" + str(row["error"]).replace(",", ";").replace("\n", " ")
                yield (row["D"], row["d"], row["m"], row["method"], note, "", "", "", "", "", "", "")
            else:
                yield tuple(row[col] for col in SCAN_COLUMNS)

    if args.format == "csv":
        _emit(args, prov, SCAN_COLUMNS, csv_rows(), None)
    else:
        collected = list(_scan_rows(args))
        _emit(args, prov, SCAN_COLUMNS, [], {"rows": collected})
    if getattr(args, "plot", None):
        from . import plots

        ok = [r for r in collected if "error" not in r]
        plots.plot_scan(ok, args.plot)
    return 0


# ---------------------------------------------------------------------------
# Verification suites


def _suite_kohnen(args: argparse.Namespace) -> dict:
    checks = passed = 0
    worst = 0.0
    for d, d_prime in KOHNEN_PAIRS:
        spec = GenusCharacterSpec(D=d * d_prime, d=d, d_prime=d_prime)
        for m in range(1, KOHNEN_M_MAX + 1):
            for c in range(4, KOHNEN_C_MAX + 1, 4):
                diff = abs(weyl_sum(m, spec, c) - weyl_via_kohnen(m, spec, c))
                worst = max(worst, diff)
                checks += 1
                passed += diff < 1e-9
    return {
        "suite": "kohnen",
        "checks": checks,
        "passed": passed,
        "failed": checks - passed,
        "max_abs_diff": worst,
        "all_pass": passed == checks,
    }


def _suite_weil(args: argparse.Namespace) -> dict:
    cmax = args.cmax or 2000
    nmax = args.nmax or 40
    checks = passed = 0
    worst_excess = -math.inf
    worst_imag = 0.0
    for wt in (WEIGHT_PLUS, WEIGHT_MINUS):
        residues = (0, 1) if wt is WEIGHT_PLUS else (0, 3)
        values = [v for v in range(1, nmax + 1) if v % 4 in residues]
        for c in range(4, cmax + 1, 4):
            table = s_plus_table(wt, values, values, c)
            for i, m in enumerate(values):
                for j, n in enumerate(values):
                    entry = complex(table[i, j])
                    bound = weil_bound(m, n, c)
                    excess = abs(entry) - bound
                    worst_excess = max(worst_excess, excess)
                    worst_imag = max(worst_imag, abs(entry.imag))
                    checks += 1
                    passed += excess <= 0 and abs(entry.imag) < 1e-10
    return {
        "suite": "weil",
        "checks": checks,
        "passed": passed,
        "failed": checks - passed,
        "worst_bound_excess": worst_excess,
        "worst_imag": worst_imag,
        "all_pass": passed == checks,
    }


def _suite_vanishing(args: argparse.Namespace) -> dict:
    cmax = args.cmax or 512
    nmax = args.nmax or 64
    checks = passed = 0
    for c in range(4, cmax + 1, 4):
        for n in range(1, nmax + 1):
            in_class = (n % 4 == 0 and c % 16 == 8) or (n % 4 == 1 and c % 16 == 0)
            if not in_class:
                continue
            checks += 1
            try:
                passed += vanishing_check(n, c)
            except AccuracyError:
                pass
    return {
        "suite": "vanishing",
        "checks": checks,
        "passed": passed,
        "failed": checks - passed,
        "all_pass": passed == checks,
    }


def _suite_phiplus(args: argparse.Namespace) -> dict:
    from .spectral import verification_report

    rep = verification_report(X=args.X)
    checks = len(rep["rows"])
    passed = sum(1 for row in rep["rows"] if row["pass"])
    worst = max(row["abs_diff"] / row["tail_bound"] for row in rep["rows"])
    return {
        "suite": "phiplus",
        "checks": checks,
        "passed": passed,
        "failed": checks - passed,
        "worst_diff_over_bound": worst,
        "all_pass": rep["all_pass"],
    }


SUITES: dict[str, Callable[[argparse.Namespace], dict]] = {
    "kohnen": _suite_kohnen,
    "weil": _suite_weil,
    "vanishing": _suite_vanishing,
    "phiplus": _suite_phiplus,
}


def _cmd_verify(args: argparse.Namespace) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = [SUITES[name](args) for name in names]
    all_pass = all(r["all_pass"] for r in results)
    prov = report.provenance(
        "verify",
        {"suite": args.suite, "cmax": args.cmax, "nmax": args.nmax, "X": args.X},
    )
    headers = ("suite", "checks", "passed", "failed", "all_pass")
    _emit(
        args,
        prov,
        headers,
        [tuple(r[h] for h in headers) for r in results],
        {"suites": results, "all_pass": all_pass},
    )
    if not all_pass:
        failing = ", ".join(
            f"{r['suite']} {r['failed']}/{r['checks']}" for r in results if not r["all_pass"]
        )
        print(f"error: verification failed: {failing}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# Parser and entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modtraces",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument(
        "--format",
        "--emit",
        dest="format",
        choices=("csv", "json"),
        help="artifact format (default: csv for streams and scans, json otherwise)",
    )
    common.add_argument(
        "--cache-dir",
        help="q-expansion cache directory (default: $MODTRACES_CACHE, else ~/.cache/modtraces)",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser(
        "kloosterman",
        parents=[common],
        help="stream weighted partial sums of plus-space Kloosterman sums",
    )
    p.add_argument("--k", type=float, required=True, help="weight, 0.5 or -0.5")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--cmax", type=float, required=True, help="modulus cutoff X")
    p.add_argument("--weight-mode", choices=("inv_c", "inv_sqrt_c"))
    p.add_argument("--fast", action="store_true", help="use the multiplicative fast path")
    p.add_argument("--plot", help="also render the partial-sum trajectory to this file")
    p.set_defaults(func=_cmd_kloosterman, default_format="csv")

    p = sub.add_parser(
        "weyl", parents=[common], help="stream weighted partial sums of quadratic Weyl sums"
    )
    p.add_argument("--D", type=int, required=True, help="discriminant D = d * d'")
    p.add_argument("--d", type=int, required=True, help="fundamental factor carrying the character")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--cmax", type=float, required=True)
    p.add_argument("--weight-mode", choices=("inv_c", "inv_sqrt_c"))
    p.add_argument("--plot", help="also render the partial-sum trajectory to this file")
    p.set_defaults(func=_cmd_weyl, default_format="csv")

    p = sub.add_parser(
        "trace", parents=[common], help="character-twisted cycle-integral trace of j_m"
    )
    p.add_argument("--D", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--method", choices=("direct", "series"), default="direct")
    p.add_argument("--X", type=float, help="series cutoff (series method)")
    p.add_argument("--tol", type=float, help="quadrature tolerance (direct method)")
    p.set_defaults(func=_cmd_trace, default_format="json")

    p = sub.add_parser(
        "surface", parents=[common], help="character-twisted regularized surface integral of j_m"
    )
    p.add_argument("--D", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument(
        "--method", choices=("surface_direct", "surface_series"), default="surface_series"
    )
    p.add_argument("--X", type=float, help="series cutoff (surface_series)")
    p.add_argument("--tol", type=float, default=1e-4, help="quadrature tolerance (surface_direct)")
    p.set_defaults(func=_cmd_surface, default_format="json")

    p = sub.add_parser("cm", parents=[common], help="trace of singular moduli Tr_d(j_m)")
    p.add_argument("--d", type=int, required=True, help="negative discriminant")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--mode", choices=("auto", "double", "extended"), default="auto")
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=_cmd_cm, default_format="json")

    p = sub.add_parser(
        "scan",
        parents=[common],
        help="series traces across odd fundamental discriminants (parallel)",
    )
    p.add_argument("--D-start", type=int, required=True)
    p.add_argument("--D-end", type=int, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--X", type=float, default=1e4, help="series cutoff per discriminant")
    p.add_argument("--workers", type=int, default=1, help="process-pool width (output is identical for any value)")
    p.add_argument("--plot", help="also render residual magnitudes to this file")
    p.set_defaults(func=_cmd_scan, default_format="csv")

    p = sub.add_parser("verify", parents=[common], help="run the consistency suites")
    p.add_argument("--suite", choices=(*SUITES, "all"), default="all")
    p.add_argument("--cmax", type=int, default=None, help="modulus cutoff override")
    p.add_argument("--nmax", type=int, default=None, help="index cutoff override")
    p.add_argument("--X", type=float, default=1e5, help="phiplus series cutoff")
    p.set_defaults(func=_cmd_verify, default_format="json")

    p = sub.add_parser(
        "phiplus", parents=[common], help="Eisenstein coefficient series vs closed form"
    )
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s-re", type=float, required=True)
    p.add_argument("--s-im", type=float, default=0.0)
    p.add_argument("--X", type=float, default=1e5)
    p.set_defaults(func=_cmd_phiplus, default_format="json")

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    if args.cache_dir:
        resolve_cache_dir(args.cache_dir)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
