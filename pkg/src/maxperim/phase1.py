"""Phase I: pick the code whose closure constraint is least violated at the
regular-2n-gon angles.

At the regular angles the constraint residual factors through a signed sum
of 2n-th roots of unity.  For n a power of two and axially symmetric codes
the problem collapses to a subset-sum over the positive weights
w_j = cos((j - 1/2) pi / n), j = 1..n/2, with budget half their total.
The search is exact: weights are scaled to integers with the fixed
denominator 2^128 / n and explored by depth-first branch-and-prune
(cut when the budget is exceeded, or when the optimistic completion bound
running-sum + remaining-total cannot beat the incumbent).

A numba kernel carrying the 128-bit integers in two 64-bit limbs handles
the large instances; the pure-Python search is the reference and also
provides top-k incumbents and the float arithmetic mode.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import gmpy2
from gmpy2 import mpfr, mpc

from .codes import Code, QuarterCode
from .precision import GUARD_BITS, to_scientific, workprec

__all__ = [
    "SspInstance",
    "SspResult",
    "FixedPoint128",
    "InvalidSizeError",
    "ExhaustiveLimitError",
    "residual",
    "build_ssp",
    "solve_ssp",
    "solve_ssp_topk",
    "minimize_residual_general",
    "parallel_split",
    "merge_results",
]

#: Quarter codes are re-derived from x via c_j = 1 - 2 x_j.
SUBSTITUTION = "c_j = 1 - 2*x_j"

_FIXED_BITS = 128
_WEIGHT_PRECISION = 192  # bits used to round weights onto the fixed grid


class InvalidSizeError(ValueError):
    """n is not a power of two >= 4."""


class ExhaustiveLimitError(ValueError):
    """Instance too large for the exhaustive desk-scale search."""


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class FixedPoint128:
    """Signed fixed-point number with implied denominator 2^128 / n."""

    numerator: int
    n: int

    def __post_init__(self):
        if not _is_power_of_two(self.n):
            raise InvalidSizeError(f"fixed-point denominator needs n = 2^s, got {self.n}")
        if abs(self.numerator) >= 1 << _FIXED_BITS:
            raise OverflowError("fixed-point numerator exceeds 128 bits")

    @property
    def denominator(self) -> int:
        return (1 << _FIXED_BITS) // self.n

    def to_mpfr(self, precision_bits: int = 256) -> mpfr:
        with workprec(precision_bits):
            return mpfr(self.numerator) / mpfr(self.denominator)

    @classmethod
    def from_real(cls, value: mpfr, n: int) -> "FixedPoint128":
        with workprec(_WEIGHT_PRECISION):
            den = mpfr((1 << _FIXED_BITS) // n)
            return cls(int(gmpy2.rint(mpfr(value) * den)), n)


def _weights_mpfr(n: int, precision_bits: int) -> list:
    with workprec(precision_bits):
        pi = gmpy2.const_pi()
        return [
            gmpy2.cos((mpfr(2 * j - 1) / (2 * n)) * pi) for j in range(1, n // 2 + 1)
        ]


@dataclass(frozen=True)
class SspInstance:
    """Subset-sum instance for one polygon size n = 2^s."""

    n: int
    weights: tuple  # FixedPoint128 numerators, strictly decreasing
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def m(self) -> int:
        return self.n // 2

    @property
    def total(self) -> int:
        return sum(self.weights)

    def budget_numerator2(self) -> int:
        """Budget is total/2; returned doubled so it stays integral."""
        return self.total

    def weights_mpfr(self, precision_bits: int = 256) -> list:
        return _weights_mpfr(self.n, precision_bits)

    def budget_mpfr(self, precision_bits: int = 256) -> mpfr:
        with workprec(precision_bits):
            return sum(self.weights_mpfr(precision_bits)) / 2


def build_ssp(n: int) -> SspInstance:
    """Weights w_j = cos((j-1/2) pi/n) on the 2^128/n fixed-point grid."""
    if not _is_power_of_two(n) or n < 4:
        raise InvalidSizeError(f"SSP instances need n = 2^s >= 4, got {n}")
    ws = _weights_mpfr(n, _WEIGHT_PRECISION)
    nums = tuple(FixedPoint128.from_real(w, n).numerator for w in ws)
    if nums[-1] <= 0 or not all(a > b for a, b in zip(nums, nums[1:])):
        raise AssertionError("weights must be strictly positive and decreasing")
    if sum(nums) >= 1 << (_FIXED_BITS - 1):
        raise OverflowError("weight total exceeds the 128-bit budget headroom")
    return SspInstance(
        n=n,
        weights=nums,
        metadata={"substitution": SUBSTITUTION, "denominator": f"2^128/{n}"},
    )


@dataclass(frozen=True)
class SspResult:
    """One solution of the subset-sum search."""

    n: int
    quarter: QuarterCode
    gap_numerator: object  # int, gap = numerator * n / 2^129; None in float mode
    gap: mpfr  # real-value rendering of the gap
    nodes_visited: int
    wall_time: float
    arithmetic: str = "fixed128"

    def gap_decimal(self, digits: int = 12) -> str:
        with workprec(256):
            return to_scientific(self.gap, digits)


def _parse_suffix(suffix, m: int) -> list:
    """Forced x-values for the last len(suffix) positions; -1 means free."""
    forced = [-1] * m
    if suffix is None:
        return forced
    if isinstance(suffix, str):
        bits = []
        for ch in suffix:
            if ch in "0+":
                bits.append(0)
            elif ch in "1-":
                bits.append(1)
            else:
                raise ValueError(f"suffix characters must be 0/1 or +/-, got {ch!r}")
    else:
        bits = [int(b) for b in suffix]
    if len(bits) >= m:
        raise ValueError(f"suffix length must be < {m}")
    for i, b in enumerate(bits):
        forced[m - len(bits) + i] = b
    return forced


def _mask_lex_smaller(a: int, b: int, m: int) -> bool:
    """Is quarter code of mask ``a`` lexicographically smaller ('+' < '-')?"""
    for j in range(m):
        xa = (a >> j) & 1
        xb = (b >> j) & 1
        if xa != xb:
            return xa < xb
    return False


def _search_python(weights: Sequence, budget, forced, k: int):
    """Reference branch-and-prune; works for int and float weights.

    Returns (list of (T, mask) sorted best-first, nodes).  Exact top-k:
    prunes only against the k-th incumbent and never on ties.
    """
    m = len(weights)
    rest = [0] * (m + 1)
    for j in range(m - 1, -1, -1):
        rest[j] = rest[j + 1] + weights[j]
    best: list = []  # (T, mask) sorted by T desc, lex-smaller mask first on ties
    nodes = 0

    def consider(T, mask):
        for i, (bt, bm) in enumerate(best):
            if T > bt or (T == bt and _mask_lex_smaller(mask, bm, m)):
                best.insert(i, (T, mask))
                break
        else:
            best.append((T, mask))
        del best[k:]

    def rec(j, T, mask):
        nonlocal nodes
        nodes += 1
        if j == m:
            if len(best) < k or T > best[-1][0] or T == best[-1][0]:
                consider(T, mask)
            return
        if len(best) == k and T + rest[j] < best[-1][0]:
            return
        f = forced[j]
        t_take = T + weights[j]
        if f != 0 and t_take <= budget:
            rec(j + 1, t_take, mask | (1 << j))
        if f != 1:
            rec(j + 1, T, mask)

    import sys

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, m + 100))
    try:
        rec(0, 0 if isinstance(weights[0], int) else 0.0, 0)
    finally:
        sys.setrecursionlimit(old)
    return best, nodes


try:
    import numba
    import numpy as _np

    @numba.njit(cache=True)
    def _search_kernel(w_hi, w_lo, r_hi, r_lo, b_hi, b_lo, forced):  # pragma: no cover
        m = len(w_hi)
        MASK = _np.uint64(0xFFFFFFFFFFFFFFFF)
        best_hi = _np.uint64(0)
        best_lo = _np.uint64(0)
        best_mask = _np.uint64(0)
        have_best = False
        nodes = 0
        # explicit DFS stack: phase 0 = enter, try take; 1 = try skip; 2 = unwind
        ph = _np.zeros(m + 2, _np.int8)
        t_hi = _np.zeros(m + 2, _np.uint64)
        t_lo = _np.zeros(m + 2, _np.uint64)
        mk = _np.zeros(m + 2, _np.uint64)
        sp = 0
        ph[0] = 0
        while sp >= 0:
            j = sp
            phase = ph[sp]
            if phase == 0:
                nodes += 1
                if j == m:
                    better = False
                    if not have_best:
                        better = True
                    elif t_hi[sp] > best_hi or (t_hi[sp] == best_hi and t_lo[sp] > best_lo):
                        better = True
                    elif t_hi[sp] == best_hi and t_lo[sp] == best_lo:
                        # tie: keep lexicographically smaller quarter code
                        for q in range(m):
                            xa = (mk[sp] >> _np.uint64(q)) & _np.uint64(1)
                            xb = (best_mask >> _np.uint64(q)) & _np.uint64(1)
                            if xa != xb:
                                better = xa < xb
                                break
                    if better:
                        best_hi = t_hi[sp]
                        best_lo = t_lo[sp]
                        best_mask = mk[sp]
                        have_best = True
                    sp -= 1
                    continue
                # optimistic bound: T + remaining total (carry => cannot prune)
                s_lo = t_lo[sp] + r_lo[j]
                carry = _np.uint64(1) if s_lo < t_lo[sp] else _np.uint64(0)
                s_hi = t_hi[sp] + r_hi[j] + carry
                overflowed = s_hi < t_hi[sp]
                if have_best and not overflowed:
                    if s_hi < best_hi or (s_hi == best_hi and s_lo < best_lo):
                        sp -= 1
                        continue
                ph[sp] = 1
                if forced[j] != 0:
                    n_lo = t_lo[sp] + w_lo[j]
                    carry = _np.uint64(1) if n_lo < t_lo[sp] else _np.uint64(0)
                    n_hi = t_hi[sp] + w_hi[j] + carry
                    if n_hi < b_hi or (n_hi == b_hi and n_lo <= b_lo):
                        t_hi[sp + 1] = n_hi
                        t_lo[sp + 1] = n_lo
                        mk[sp + 1] = mk[sp] | (_np.uint64(1) << _np.uint64(j))
                        ph[sp + 1] = 0
                        sp += 1
                continue
            if phase == 1:
                ph[sp] = 2
                if forced[j] != 1:
                    t_hi[sp + 1] = t_hi[sp]
                    t_lo[sp + 1] = t_lo[sp]
                    mk[sp + 1] = mk[sp]
                    ph[sp + 1] = 0
                    sp += 1
                continue
            sp -= 1
        return best_hi, best_lo, best_mask, nodes

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False


def _solve_fixed_compiled(inst: SspInstance, forced):
    import numpy as np

    m = inst.m
    M64 = (1 << 64) - 1
    w_hi = np.array([w >> 64 for w in inst.weights], dtype=np.uint64)
    w_lo = np.array([w & M64 for w in inst.weights], dtype=np.uint64)
    rest = [0] * (m + 1)
    for j in range(m - 1, -1, -1):
        rest[j] = rest[j + 1] + inst.weights[j]
    r_hi = np.array([r >> 64 for r in rest[:m]], dtype=np.uint64)
    r_lo = np.array([r & M64 for r in rest[:m]], dtype=np.uint64)
    budget = inst.total >> 1
    fa = np.array(forced, dtype=np.int8)
    bh, bl, bm, nodes = _search_kernel(
        w_hi, w_lo, r_hi, r_lo, np.uint64(budget >> 64), np.uint64(budget & M64), fa
    )
    T = (int(bh) << 64) | int(bl)
    return [(T, int(bm))], int(nodes)


def _result_from_mask(inst: SspInstance, T: int, mask: int, nodes: int, wall: float,
                      arithmetic: str) -> SspResult:
    m = inst.m
    x = [(mask >> j) & 1 for j in range(m)]
    entries = tuple(1 - 2 * xi for xi in x)
    quarter = QuarterCode(inst.n, entries)
    if arithmetic == "fixed128":
        gap_num = inst.total - 2 * T
        if gap_num < 0:
            raise AssertionError("search returned an infeasible subset")
        with workprec(256):
            gap = mpfr(gap_num) * inst.n / mpfr(2) ** 129
    else:
        gap_num = None
        ws = inst.weights_mpfr(128)
        with workprec(128):
            gap = sum(ws) / 2 - sum(w for w, xi in zip(ws, x) if xi)
    return SspResult(
        n=inst.n,
        quarter=quarter,
        gap_numerator=gap_num,
        gap=gap,
        nodes_visited=nodes,
        wall_time=wall,
        arithmetic=arithmetic,
    )


def solve_ssp_topk(
    inst: SspInstance,
    k: int,
    arithmetic: str = "fixed128",
    suffix=None,
    use_compiled: bool = True,
) -> list:
    """The k best subset-sum solutions, best (smallest gap) first."""
    if arithmetic not in ("fixed128", "float"):
        raise ValueError(f"arithmetic must be fixed128 or float, got {arithmetic!r}")
    forced = _parse_suffix(suffix, inst.m)
    t0 = time.perf_counter()
    if arithmetic == "fixed128":
        if k == 1 and use_compiled and _HAVE_NUMBA:
            best, nodes = _solve_fixed_compiled(inst, forced)
        else:
            best, nodes = _search_python(inst.weights, inst.total >> 1, forced, k)
    else:
        ws = [float(w) * inst.n / 2.0**128 for w in inst.weights]
        best, nodes = _search_python(ws, sum(ws) / 2.0, forced, k)
    wall = time.perf_counter() - t0
    return [
        _result_from_mask(inst, T, mask, nodes, wall, arithmetic)
        for T, mask in best
    ]


def solve_ssp(
    inst: SspInstance,
    arithmetic: str = "fixed128",
    suffix=None,
    use_compiled: bool = True,
) -> SspResult:
    """Globally optimal subset-sum solution (restricted to ``suffix`` if given)."""
    return solve_ssp_topk(inst, 1, arithmetic, suffix, use_compiled)[0]


def parallel_split(inst: SspInstance, suffix_bits: int) -> list:
    """2^suffix_bits disjoint suffix patterns covering the whole search space."""
    if not 0 <= suffix_bits <= 8:
        raise ValueError(f"suffix_bits must be in 0..8, got {suffix_bits}")
    if suffix_bits >= inst.m:
        raise ValueError("suffix must be shorter than the variable vector")
    if suffix_bits == 0:
        return [""]
    return [format(i, f"0{suffix_bits}b") for i in range(1 << suffix_bits)]


def merge_results(results: Sequence[SspResult]) -> SspResult:
    """Merge per-suffix results: minimum gap, ties to the lexicographically
    smaller quarter code; node counts and wall times accumulate."""
    if not results:
        raise ValueError("nothing to merge")

    def key(r):
        exact = r.gap_numerator if r.gap_numerator is not None else r.gap
        return (exact, str(r.quarter))

    best = min(results, key=key)
    nodes = sum(r.nodes_visited for r in results)
    wall = sum(r.wall_time for r in results)
    return SspResult(
        n=best.n,
        quarter=best.quarter,
        gap_numerator=best.gap_numerator,
        gap=best.gap,
        nodes_visited=nodes,
        wall_time=wall,
        arithmetic=best.arithmetic,
    )


def residual(code: Code, precision_bits: int = 256) -> mpc:
    """Closure-constraint residual of ``code`` at the regular-2n-gon angles:
    (xi - 1) * sum_j c_j xi^j with xi = exp(i pi / n).

    The quantity xi^{-1} * residual is purely imaginary for axially
    symmetric codes.
    """
    if precision_bits < 64:
        raise ValueError("residual needs precision_bits >= 64")
    n = code.n
    with workprec(precision_bits + GUARD_BITS):
        pi = gmpy2.const_pi()
        xi = gmpy2.exp(mpc(0, 1) * pi / n)
        acc = mpc(0)
        power = mpc(1)
        for j in range(1, n + 1):
            power = power * xi
            acc += code.half[j - 1] * power
        return (xi - 1) * acc


def minimize_residual_general(n: int, precision_bits: int = 256):
    """Exhaustive minimum of |sum_j c_j xi^j| over all half codes, without
    the axial symmetry assumption (c_1 = +1 fixed by symmetry).

    Returns (code, gap) with gap = |sum|/4, the same normalization as the
    subset-sum gap; the code representative is chosen with the residual
    argument in [0, pi/(2n)].
    """
    if n > 20:
        raise ExhaustiveLimitError(f"general search is exhaustive-only up to n=20, got {n}")
    if n < 3:
        raise ValueError("n must be >= 3")
    import cmath
    import math

    roots = [cmath.exp(1j * math.pi * j / n) for j in range(1, n + 1)]
    total = sum(roots)  # all c_j = +1

    def modulus(bits):
        # bit k set => c_{k+2} = -1 (c_1 fixed +1); a flip subtracts 2*xi^j
        acc = total
        b = bits
        while b:
            lsb = b & -b
            acc -= 2 * roots[lsb.bit_length()]
            b ^= lsb
        return abs(acc)

    # double-precision sweep for the minimum, then a high-precision re-rank
    # of everything within the float noise margin
    best_val = min(modulus(bits) for bits in range(1 << (n - 1)))
    shortlist = [
        bits for bits in range(1 << (n - 1)) if modulus(bits) < best_val + 1e-9
    ]
    best = None
    for bits in shortlist:
        half = tuple(
            -1 if j >= 2 and (bits >> (j - 2)) & 1 else 1 for j in range(1, n + 1)
        )
        with workprec(precision_bits + GUARD_BITS):
            mod = _half_sum_modulus(half, n)
        if best is None or mod < best[0]:
            best = (mod, half)
    mod, half = best
    code = _normalize_argument(Code(n, half), precision_bits)
    with workprec(precision_bits + GUARD_BITS):
        return code, mpfr(mod) / 4


def _half_sum_modulus(half, n):
    pi = gmpy2.const_pi()
    xi = gmpy2.exp(mpc(0, 1) * pi / n)
    acc = mpc(0)
    power = mpc(1)
    for j in range(1, n + 1):
        power = power * xi
        acc += half[j - 1] * power
    return abs(acc)


def _normalize_argument(code: Code, precision_bits: int) -> Code:
    """Dihedral image of ``code`` whose residual argument lies in
    [0, pi/(2n)]; the input is returned when the residual vanishes."""
    n = code.n
    with workprec(precision_bits + GUARD_BITS):
        pi = gmpy2.const_pi()
        hi = pi / (2 * n)
        r = residual(code, precision_bits)
        if abs(r) < mpfr(2) ** (-(precision_bits // 2)):
            return code
        full = code.full()
        eps = mpfr(2) ** (-(precision_bits // 2))
        for base in (full, tuple(reversed(full))):
            for s in range(2 * n):
                c = Code.from_full(base[s:] + base[:s])
                arg = gmpy2.phase(residual(c, precision_bits))
                if -eps <= arg <= hi + eps:
                    return c
    raise AssertionError("no dihedral image lands in the argument window")
