"""Command-line interface.

Subcommands: codes, phase1, phase2, solve, enumerate-solve, verify, export.
Exit codes: 0 success, 1 computational failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor

import gmpy2
from gmpy2 import mpfr

from . import pipeline, records
from .codes import (
    Code,
    code_to_composition,
    count_codes,
    enumerate_codes,
)
from .geometry import NotClosedError, NotConvexError, NotSmallError
from .phase1 import (
    build_ssp,
    merge_results,
    parallel_split,
    solve_ssp,
    solve_ssp_topk,
)
from .phase2 import VARIANTS, NoConvergenceError, SingularSystemError
from .polynomials import POLYNOMIALS
from .precision import to_scientific, workprec

COMPUTE_ERRORS = (
    NoConvergenceError,
    SingularSystemError,
    NotClosedError,
    NotConvexError,
    NotSmallError,
    records.UnverifiedRecordError,
    OverflowError,
)


def _add_precision_args(p):
    p.add_argument("--prec-bits", type=int, default=360)
    p.add_argument("--tol-bits", type=int, default=320)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="maxperim",
        description="Convex small polygons of maximum perimeter: code "
        "enumeration, subset-sum Phase I, arbitrary-precision Newton Phase II.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("codes", help="enumerate or count code classes")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--count-only", action="store_true")
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--compositions", action="store_true",
                   help="print minus-run compositions instead of sign strings")

    p = sub.add_parser("phase1", help="subset-sum search for the best code")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mode", choices=("int128", "float"), default="int128")
    p.add_argument("--suffix", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--top", type=int, default=1)

    p = sub.add_parser("phase2", help="Newton solve for a fixed half code")
    p.add_argument("--code", default=None, help="half code string, or @file")
    p.add_argument("--variant", choices=VARIANTS, default=None)
    p.add_argument("--max-iter", type=int, default=64)
    _add_precision_args(p)

    p = sub.add_parser("solve", help="two-phase solve for n = 2^s")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--quarter-code", default=None)
    p.add_argument("--variant", choices=VARIANTS, default=None)
    p.add_argument("--mode", choices=("int128", "float"), default="int128")
    _add_precision_args(p)

    p = sub.add_parser("enumerate-solve", help="solve every code class of size n")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--allow-large", action="store_true")
    _add_precision_args(p)

    p = sub.add_parser("verify", help="polynomial root verification")
    p.add_argument("--poly", choices=sorted(POLYNOMIALS), required=True)
    p.add_argument("--value", default=None, help="decimal value to test")
    p.add_argument("--value-from", default=None, help="JSON record file")
    p.add_argument("--field", default="perimeter")
    p.add_argument(
        "--transform",
        choices=("auto", "none", "square", "eighth", "side-square"),
        default="auto",
        help="map the input onto the polynomial's variable (auto: square "
        "for P8, side-square (v/8)^2 for E8; both roots are squares)",
    )
    p.add_argument(
        "--refine",
        action="store_true",
        help="Newton-refine the (possibly low-precision) input to the "
        "nearest root first, then report how many of its digits survive",
    )
    p.add_argument("--tol-bits", type=int, default=320)

    p = sub.add_parser("export", help="serialize a solution record")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=records.EXPORT_FORMATS, required=True)
    p.add_argument("--output", default=None)

    return ap


def _emit(data: bytes, path):
    if path:
        with open(path, "wb") as f:
            f.write(data)
    else:
        sys.stdout.write(data.decode())


def _cmd_codes(args) -> int:
    if args.count_only:
        print(count_codes(args.n))
        return 0
    for i, code in enumerate(enumerate_codes(args.n)):
        if args.limit is not None and i >= args.limit:
            break
        if args.compositions:
            print(code_to_composition(code))
        else:
            print(code)
    return 0


def _phase1_suffix_worker(args):
    n, mode, suffix = args
    arithmetic = "fixed128" if mode == "int128" else "float"
    return solve_ssp(build_ssp(n), arithmetic=arithmetic, suffix=suffix)


def _phase1_record(r) -> dict:
    return {
        "n": r.n,
        "quarter_code": str(r.quarter),
        "gap_decimal": r.gap_decimal(),
        "gap_numerator": str(r.gap_numerator) if r.gap_numerator is not None else None,
        "nodes": r.nodes_visited,
        "seconds": round(r.wall_time, 6),
    }


def _cmd_phase1(args) -> int:
    arithmetic = "fixed128" if args.mode == "int128" else "float"
    inst = build_ssp(args.n)
    if args.jobs > 1 and args.suffix is None and args.top == 1:
        bits = max(1, (args.jobs - 1).bit_length())
        suffixes = parallel_split(inst, bits)
        work = [(args.n, args.mode, s) for s in suffixes]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_phase1_suffix_worker, work))
        merged = merge_results(results)
        print(json.dumps(_phase1_record(merged), sort_keys=True))
        return 0
    results = solve_ssp_topk(inst, args.top, arithmetic=arithmetic, suffix=args.suffix)
    for r in results:
        print(json.dumps(_phase1_record(r), sort_keys=True))
    return 0


def _read_code_arg(spec: str) -> Code:
    if spec.startswith("@"):
        with open(spec[1:]) as f:
            spec = f.read().strip()
    return Code.from_string(spec)


def _cmd_phase2(args) -> int:
    if not args.code:
        print("phase2 requires --code", file=sys.stderr)
        return 2
    code = _read_code_arg(args.code)
    result = pipeline.solve_code(
        code,
        precision_bits=args.prec_bits,
        tol_bits=args.tol_bits,
        variant=args.variant,
        max_iter=args.max_iter,
    )
    _print_record(records.build_record(result))
    return 0


def _print_record(rec: dict):
    """Canonical payload to stdout; volatile timings to stderr."""
    sys.stdout.write(records.canonical_json(rec).decode())
    print(json.dumps({"timings": rec.get("timings", {})}), file=sys.stderr)


def _cmd_solve(args) -> int:
    result = pipeline.solve_two_phase_detailed(
        args.n,
        precision_bits=args.prec_bits,
        tol_bits=args.tol_bits,
        variant=args.variant,
        quarter_code=args.quarter_code,
        arithmetic="fixed128" if args.mode == "int128" else "float",
    )
    _print_record(records.build_record(result))
    return 0


def _cmd_enumerate_solve(args) -> int:
    ranked = pipeline.enumerate_and_solve(
        args.n,
        precision_bits=args.prec_bits,
        tol_bits=args.tol_bits,
        jobs=args.jobs,
        allow_large=args.allow_large,
    )
    digits = 50
    for rank, entry in enumerate(ranked.entries, start=1):
        print(
            json.dumps(
                {
                    "rank": rank,
                    "code": str(entry.code),
                    "perimeter": format(entry.perimeter, f".{digits}f"),
                    "status": entry.status,
                },
                sort_keys=True,
            )
        )
    for entry in ranked.flagged:
        print(
            json.dumps(
                {"code": str(entry.code), "status": entry.status}, sort_keys=True
            ),
            file=sys.stderr,
        )
    return 0


def _cmd_verify(args) -> int:
    if (args.value is None) == (args.value_from is None):
        print("verify needs exactly one of --value / --value-from", file=sys.stderr)
        return 2
    poly = POLYNOMIALS[args.poly]
    if args.value is not None:
        raw = args.value
    else:
        with open(args.value_from) as f:
            rec = json.load(f)
        raw = rec[args.field]
    with workprec(480):
        v = mpfr(raw)
        transform = args.transform
        if transform == "auto":
            transform = {"P8": "square", "E8": "side-square"}.get(args.poly, "none")
        if transform == "square":
            v = v * v
        elif transform == "eighth":
            v = v / 8
        elif transform == "side-square":
            v = (v / 8) ** 2
        seed = v
        if args.refine:
            v = poly.refine_root(seed, 440)
    check = pipeline.verify_polynomial_root(poly, v, tol_bits=args.tol_bits)
    if check.confirmed:
        msg = f"root confirmed (backward error {to_scientific(check.backward_error, 4)})"
        if args.refine:
            agree = -gmpy2.log10(abs(v - seed) / abs(v)) if v != seed else mpfr("inf")
            msg += f"; input agrees with the root to {float(agree):.1f} digits"
        print(msg)
        return 0
    print(f"not a root (backward error {to_scientific(check.backward_error, 4)})")
    return 1


def _cmd_export(args) -> int:
    with open(args.input) as f:
        rec = json.load(f)
    data = records.export(rec, args.format)
    _emit(data, args.output)
    return 0


_DISPATCH = {
    "codes": _cmd_codes,
    "phase1": _cmd_phase1,
    "phase2": _cmd_phase2,
    "solve": _cmd_solve,
    "enumerate-solve": _cmd_enumerate_solve,
    "verify": _cmd_verify,
    "export": _cmd_export,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except COMPUTE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
