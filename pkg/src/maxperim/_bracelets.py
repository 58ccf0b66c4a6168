"""Binary bracelet generation (cyclic strings up to rotation and reflection).

A bracelet representative is the lexicographically smallest string (0 < 1)
among all rotations of itself and of its reversal.  Generation follows the
classic necklace-prefix recursion (extend keeping the FKM period invariant,
output when the period divides n) with two bracelet-specific parts:

* prune any prefix that is lexicographically greater than its own reversal
  (such a prefix heads a reversed rotation that would beat the full string);
* accept a finished necklace only if it is <= every rotation of its reversal.

A numba-compiled counting kernel mirrors the same search for large n, where
only the number of bracelets is needed.
"""

from __future__ import annotations

from typing import Iterator, Sequence

try:
    import numba
    import numpy as np

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


def _prefix_le_reversal(a: list, length: int) -> bool:
    """True unless a[:length] is strictly greater than its reversal."""
    i, j = 0, length - 1
    while i < j:
        if a[i] != a[j]:
            return a[i] < a[j]
        i += 1
        j -= 1
    return True


def _is_bracelet(a: Sequence[int]) -> bool:
    """Final acceptance: necklace ``a`` is <= all rotations of reversed(a)."""
    n = len(a)
    for s in range(n):
        for i in range(n):
            rev = a[n - 1 - ((s + i) % n)]
            if a[i] != rev:
                if a[i] > rev:
                    return False
                break
    return True


def binary_bracelets(n: int, prefix: Sequence[int] = ()) -> Iterator[tuple]:
    """Yield all binary bracelet representatives of length n in lex order.

    ``prefix`` restricts the output to representatives starting with the
    given symbols; distinct prefixes of equal length partition the output.
    """
    if n < 1:
        raise ValueError("bracelet length must be positive")
    prefix = tuple(prefix)
    if len(prefix) > n:
        raise ValueError("prefix longer than bracelet")
    a = [0] * n

    def gen(t: int, p: int) -> Iterator[tuple]:
        lo = a[t - p] if t > 0 else 0
        for v in (0, 1):
            if v < lo:
                continue
            if t < len(prefix) and v != prefix[t]:
                continue
            a[t] = v
            if not _prefix_le_reversal(a, t + 1):
                continue
            cp = p if (t > 0 and v == a[t - p]) else t + 1
            if t + 1 == n:
                if n % cp == 0 and _is_bracelet(a):
                    yield tuple(a)
            else:
                yield from gen(t + 1, cp)

    yield from gen(0, 1)


def code_bracelets(n: int, prefix: Sequence[int] = ()) -> Iterator[tuple]:
    """Bracelets of length n with an odd number (>= 3) of ones.

    These are in bijection with the polygon code classes: ones mark the
    starts of the minus-runs of the full code.
    """
    for b in binary_bracelets(n, prefix):
        w = sum(b)
        if w >= 3 and w % 2 == 1:
            yield b


def count_code_bracelets(n: int, prefix: Sequence[int] = ()) -> int:
    """Pure-Python count of ``code_bracelets(n, prefix)``."""
    return sum(1 for _ in code_bracelets(n, prefix))


if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _count_kernel(n):  # pragma: no cover - exercised via wrapper
        a = np.zeros(n, np.int8)
        fp = np.zeros(n + 1, np.int64)  # parent period per stack depth
        fv = np.zeros(n + 1, np.int64)  # next symbol to try per depth
        total = 0
        sp = 0
        fp[0] = 1
        fv[0] = 0
        while sp >= 0:
            t = sp
            p = fp[sp]
            v = fv[sp]
            if v > 1:
                sp -= 1
                continue
            fv[sp] += 1
            lo = a[t - p] if t > 0 else 0
            if v < lo:
                continue
            a[t] = v
            ok = True
            i = 0
            j = t
            while i < j:
                if a[i] != a[j]:
                    ok = a[i] < a[j]
                    break
                i += 1
                j -= 1
            if not ok:
                continue
            cp = p if (t > 0 and v == a[t - p]) else t + 1
            if t + 1 == n:
                if n % cp == 0:
                    wt = 0
                    for q in range(n):
                        wt += a[q]
                    if wt >= 3 and (wt & 1) == 1:
                        good = True
                        for s in range(n):
                            for i in range(n):
                                rev = a[n - 1 - ((s + i) % n)]
                                if a[i] != rev:
                                    if a[i] > rev:
                                        good = False
                                    break
                            if not good:
                                break
                        if good:
                            total += 1
            else:
                sp += 1
                fp[sp] = cp
                fv[sp] = 0
        return total


def count_code_bracelets_fast(n: int) -> int:
    """Count code bracelets, using the compiled kernel when available."""
    if _HAVE_NUMBA:
        return int(_count_kernel(n))
    return count_code_bracelets(n)


def brute_force_bracelets(n: int) -> set:
    """All bracelet representatives of length n by exhaustive classification.

    Exponential; oracle for tests only.
    """
    reps = set()
    for bits in range(1 << n):
        s = tuple((bits >> i) & 1 for i in range(n))
        best = None
        for cand0 in (s, s[::-1]):
            for r in range(n):
                cand = cand0[r:] + cand0[:r]
                if best is None or cand < best:
                    best = cand
        reps.add(best)
    return reps
