"""End-to-end orchestration: the two-phase solve, full enumeration with
ranking, and the algebraic verification of the octagon optima.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import gmpy2
from gmpy2 import mpfr

from . import phase2
from .codes import Code, QuarterCode, enumerate_codes, expand_quarter
from .geometry import PolygonSolution, reconstruct, upper_bound
from .phase1 import SspResult, build_ssp, solve_ssp, solve_ssp_topk
from .phase2 import (
    KktState,
    NewtonReport,
    NoConvergenceError,
    SingularSystemError,
    newton_solve,
)
from .polynomials import IntegerPolynomial
from .precision import workprec

__all__ = [
    "TwoPhaseResult",
    "RankedEntry",
    "RankedSolutions",
    "RootCheck",
    "N128_RECORD_QUARTER",
    "CHECKPOINT_ENV",
    "default_variant",
    "solve_two_phase",
    "solve_two_phase_detailed",
    "solve_code",
    "enumerate_and_solve",
    "best_codes",
    "verify_polynomial_root",
    "closed_form_check",
]

#: Best known quarter code for n = 128 (Phase I at this size is out of desk
#: reach; the search would run for years).  Used as external input.
N128_RECORD_QUARTER = (
    "-+++---+-++++-+++++----+-+---+-+"
    "+----++++-+-----+--+-+-+--+--+--"
)

CHECKPOINT_ENV = "MAXPERIM_CHECKPOINT_DIR"

#: Largest n whose Phase I runs to proven optimality at desk scale.
PHASE1_MAX_N = 64


def default_variant(n: int) -> str:
    """Schur for small n, frozen-factor Schur for n >= 32."""
    return "schur" if n <= 16 else "simplified-schur"


@dataclass
class TwoPhaseResult:
    """Everything produced by one two-phase run."""

    n: int
    ssp: Optional[SspResult]
    quarter: Optional[str]
    code: Code
    state: KktState
    report: NewtonReport
    solution: PolygonSolution
    timings: dict = field(default_factory=dict)


def solve_code(
    code: Code,
    precision_bits: int = 360,
    tol_bits: int = 320,
    variant: Optional[str] = None,
    max_iter: int = 64,
) -> TwoPhaseResult:
    """Phase II plus geometric verification for an explicitly given code."""
    variant = variant or default_variant(code.n)
    t0 = time.perf_counter()
    state, report = newton_solve(
        code, precision_bits=precision_bits, tol_bits=tol_bits,
        variant=variant, max_iter=max_iter,
    )
    t1 = time.perf_counter()
    solution = reconstruct(code, state.angles, tol_bits=tol_bits)
    t2 = time.perf_counter()
    return TwoPhaseResult(
        n=code.n,
        ssp=None,
        quarter=None,
        code=code,
        state=state,
        report=report,
        solution=solution,
        timings={"phase2_s": t1 - t0, "verify_s": t2 - t1},
    )


def solve_two_phase_detailed(
    n: int,
    precision_bits: int = 360,
    tol_bits: int = 320,
    variant: Optional[str] = None,
    quarter_code: Optional[str] = None,
    arithmetic: str = "fixed128",
    max_iter: int = 64,
) -> TwoPhaseResult:
    """Run Phase I (or accept a quarter code) and refine with Phase II.

    For n = 128 the shipped record quarter code is used unless one is
    supplied; Phase I at that size is far beyond desk scale.
    """
    ssp = None
    t0 = time.perf_counter()
    if quarter_code is not None:
        quarter = QuarterCode.from_string(quarter_code)
        if quarter.n != n:
            raise ValueError(
                f"quarter code has n={quarter.n}, expected {n}"
            )
    elif n == 128:
        quarter = QuarterCode.from_string(N128_RECORD_QUARTER)
    elif n <= PHASE1_MAX_N:
        ssp = solve_ssp(build_ssp(n), arithmetic=arithmetic)
        quarter = ssp.quarter
    else:
        raise ValueError(
            f"Phase I is tractable only up to n={PHASE1_MAX_N}; "
            f"supply quarter_code for n={n}"
        )
    t1 = time.perf_counter()
    code = expand_quarter(quarter)
    out = solve_code(
        code,
        precision_bits=precision_bits,
        tol_bits=tol_bits,
        variant=variant,
        max_iter=max_iter,
    )
    out.ssp = ssp
    out.quarter = str(quarter)
    out.timings["phase1_s"] = t1 - t0
    return out


def solve_two_phase(
    n: int,
    precision_bits: int = 360,
    tol_bits: int = 320,
    variant: Optional[str] = None,
    quarter_code: Optional[str] = None,
) -> PolygonSolution:
    """The verified maximum-perimeter candidate polygon for n = 2^s."""
    return solve_two_phase_detailed(
        n, precision_bits, tol_bits, variant, quarter_code
    ).solution


def best_codes(
    n: int, k: int, arithmetic: str = "fixed128"
) -> list:
    """The k best Phase-I codes with their subset-sum results."""
    results = solve_ssp_topk(build_ssp(n), k, arithmetic=arithmetic)
    return [(expand_quarter(r.quarter), r) for r in results]


@dataclass(frozen=True)
class RankedEntry:
    code: Code
    perimeter: mpfr
    solution: Optional[PolygonSolution]
    status: str  # "ok", "checkpoint", "non-monotone", "failed: ..."


@dataclass(frozen=True)
class RankedSolutions:
    """Per-code local maxima, sorted by descending perimeter."""

    n: int
    entries: tuple
    flagged: tuple  # entries that did not verify cleanly

    def perimeters(self) -> list:
        return [e.perimeter for e in self.entries]


def _solve_one_worker(args):
    """Process-pool worker: solve one code, return primitives only."""
    code_str, precision_bits, tol_bits, variant, max_iter = args
    code = Code.from_string(code_str)
    try:
        state, report = newton_solve(
            code, precision_bits, tol_bits, variant, max_iter
        )
    except (NoConvergenceError, SingularSystemError):
        try:
            state, report = newton_solve(
                code, precision_bits, tol_bits, "double-factor", max_iter
            )
        except (NoConvergenceError, SingularSystemError) as exc:
            return {"code": code_str, "status": f"failed: {exc}"}
    status = "ok" if report.monotone else "non-monotone"
    return {
        "code": code_str,
        "status": status,
        "phi": [gmpy2.to_binary(p) for p in state.angles.phi],
        "y": [gmpy2.to_binary(state.y1), gmpy2.to_binary(state.y2)],
    }


def _entry_from_worker(result, precision_bits, tol_bits) -> RankedEntry:
    code = Code.from_string(result["code"])
    if result["status"].startswith("failed"):
        return RankedEntry(code, mpfr(0), None, result["status"])
    phi = tuple(gmpy2.from_binary(b) for b in result["phi"])
    angles = phase2.AngleVector(code.n, phi, precision_bits)
    solution = reconstruct(code, angles, tol_bits=tol_bits)
    return RankedEntry(code, solution.perimeter, solution, result["status"])


def _checkpoint_path(n: int, checkpoint_dir) -> Optional[Path]:
    if checkpoint_dir is None:
        checkpoint_dir = os.environ.get(CHECKPOINT_ENV)
    if not checkpoint_dir:
        return None
    path = Path(checkpoint_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path / f"enumerate_{n}.jsonl"


def _load_checkpoint(path: Optional[Path]) -> dict:
    done = {}
    if path is None or not path.exists():
        return done
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            done[rec["canonical_code"]] = rec
        except (json.JSONDecodeError, KeyError):
            continue  # torn tail line from a crashed run
    return done


def enumerate_and_solve(
    n: int,
    precision_bits: int = 360,
    tol_bits: int = 320,
    jobs: int = 1,
    checkpoint_dir=None,
    allow_large: bool = False,
    max_iter: int = 64,
) -> RankedSolutions:
    """Solve the fixed-code problem for every code class of size n.

    Codes are enumerated exhaustively, each solved with the Schur Newton
    variant (retried once with double-factor on failure), verified
    geometrically, and ranked by descending perimeter.  Completed codes are
    appended to a JSON-lines checkpoint when a checkpoint directory is
    configured, and skipped on resume.
    """
    if n > 16 and not allow_large:
        raise ValueError(
            f"full enumeration is desk-scale up to n=16; pass allow_large=True "
            f"to insist on n={n}"
        )
    variant = "schur"
    ckpath = _checkpoint_path(n, checkpoint_dir)
    done = _load_checkpoint(ckpath)
    codes = [str(c) for c in enumerate_codes(n)]
    todo = [c for c in codes if c not in done]
    args = [(c, precision_bits, tol_bits, variant, max_iter) for c in todo]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            raw = list(pool.map(_solve_one_worker, args))
    else:
        raw = [_solve_one_worker(a) for a in args]

    entries = []
    ckfile = open(ckpath, "a") if ckpath else None
    try:
        for result in raw:
            entry = _entry_from_worker(result, precision_bits, tol_bits)
            entries.append(entry)
            if ckfile:
                rec = {
                    "canonical_code": result["code"],
                    "perimeter_decimal": format(entry.perimeter, ".40f")
                    if entry.solution
                    else None,
                    "status": entry.status,
                }
                ckfile.write(json.dumps(rec, sort_keys=True) + "\n")
                ckfile.flush()
    finally:
        if ckfile:
            ckfile.close()
    for code_str, rec in done.items():
        if code_str not in {str(e.code) for e in entries}:
            with workprec(160):  # checkpoint perimeters carry 40 decimals
                per = (
                    mpfr(rec["perimeter_decimal"])
                    if rec.get("perimeter_decimal")
                    else mpfr(0)
                )
            entries.append(
                RankedEntry(Code.from_string(code_str), per, None, "checkpoint")
            )
    ok = [e for e in entries if e.status in ("ok", "checkpoint")]
    flagged = [e for e in entries if e.status not in ("ok", "checkpoint")]
    ub = upper_bound(n, precision_bits)
    for e in ok:
        if not (0 < e.perimeter < ub):
            raise AssertionError(f"perimeter of {e.code} outside (0, upper bound)")
    ok.sort(key=lambda e: (-e.perimeter, str(e.code)))
    return RankedSolutions(n=n, entries=tuple(ok), flagged=tuple(flagged))


@dataclass(frozen=True)
class RootCheck:
    """Report of one exact-Horner polynomial evaluation."""

    polynomial: str
    value: mpfr
    abs_value: mpfr  # |p(value)|
    backward_error: mpfr  # |p(value)| / |p'(value)|
    confirmed: bool
    tol_bits: int


def verify_polynomial_root(
    poly: IntegerPolynomial, value: mpfr, tol_bits: int = 320
) -> RootCheck:
    """Exact-integer Horner evaluation at a high-precision value.

    Declares the root confirmed when the backward error
    |p(v)| / |p'(v)| stays below 2^-(tol_bits - 32).
    """
    prec = max(value.precision, 360)
    with workprec(prec + 16):
        pv = abs(poly(mpfr(value)))
        dv = abs(poly.derivative_at(mpfr(value)))
        if dv == 0:
            raise ZeroDivisionError("polynomial derivative vanishes at the value")
        backward = pv / dv
        confirmed = backward < mpfr(2) ** (-(tol_bits - 32))
        return RootCheck(
            polynomial=poly.name,
            value=mpfr(value),
            abs_value=pv,
            backward_error=backward,
            confirmed=bool(confirmed),
            tol_bits=tol_bits,
        )


def closed_form_check(
    expr: str, value: mpfr, tol_bits: int = 320, precision_bits: Optional[int] = None
) -> bool:
    """Compare a value against a rational combination of sin(pi/k) terms.

    Accepted terms: integers, rationals a/b, and multiples of sin(pi/k),
    e.g. ``"2 + 4 sin(pi/12)"`` or ``"12 sin(pi/18) + 4 sin(pi/12)"``.
    """
    import re

    if precision_bits is None:
        precision_bits = max(getattr(value, "precision", 360), 360)
    terms = re.findall(r"[+-]?[^+-]+", expr.replace(" ", ""))
    with workprec(precision_bits + 16):
        pi = gmpy2.const_pi()
        acc = mpfr(0)
        for term in terms:
            m = re.fullmatch(
                r"([+-]?)(\d+)?(?:/(\d+))?(?:\*?sin\(pi/(\d+)\))?", term
            )
            if not m or (m.group(2) is None and m.group(4) is None):
                raise ValueError(f"cannot parse closed-form term {term!r}")
            sign = -1 if m.group(1) == "-" else 1
            coef = mpfr(int(m.group(2))) if m.group(2) else mpfr(1)
            if m.group(3):
                coef /= int(m.group(3))
            if m.group(4):
                coef *= gmpy2.sin(pi / int(m.group(4)))
            acc += sign * coef
        return abs(acc - mpfr(value)) < mpfr(2) ** (-(tol_bits - 16))
