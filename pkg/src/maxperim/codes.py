"""Combinatorial codes of small polygons: the discrete half of the problem.

A code is an antisymmetric sign vector c of length 2n (c_{n+j} = -c_j)
recording how the boundary of the zonogon generated by an n-gon alternates
between the two index advances of its traversal.  We store only the first
half; the second half is implied.  Codes are considered up to the dihedral
group of the 2n-cycle (all rotations and reflections), and no run of equal
signs may exceed n - 2.

Three interchangeable views are implemented:

* sign sequences (``Code``),
* odd-length integer compositions of n, the minus-run lengths
  (``Composition``),
* axially symmetric quarter codes of length n/2 (``QuarterCode``).

Enumeration walks binary bracelets of length n with an odd number (>= 3)
of ones; ones mark minus-run starts, so bracelet classes and code classes
correspond one-to-one.

Global sign flip is not a separate symmetry: by antisymmetry, rotating the
full code by n realizes negation, so c and -c always lie in the same
dihedral class.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

from ._bracelets import code_bracelets, count_code_bracelets_fast

__all__ = [
    "Code",
    "QuarterCode",
    "Composition",
    "InvalidCodeError",
    "InvalidCompositionError",
    "InvalidDivisorError",
    "canonicalize",
    "enumerate_codes",
    "count_codes",
    "code_to_composition",
    "composition_to_code",
    "odd_divisor_code",
    "expand_quarter",
    "equivalent",
]


class InvalidCodeError(ValueError):
    """A sign sequence violates a code invariant."""


class InvalidCompositionError(ValueError):
    """Parts do not sum to n, or the length is not an odd number >= 3."""


class InvalidDivisorError(ValueError):
    """The requested divisor is not an odd divisor >= 3."""


def _parse_signs(s: str) -> tuple:
    out = []
    for ch in s:
        if ch == "+":
            out.append(1)
        elif ch == "-":
            out.append(-1)
        else:
            raise InvalidCodeError(f"unexpected sign character {ch!r}")
    return tuple(out)


def _sign_str(seq: Sequence[int]) -> str:
    return "".join("+" if v == 1 else "-" for v in seq)


def _max_cyclic_run(full: Sequence[int]) -> int:
    m = len(full)
    best = 0
    cur = 1
    for i in range(1, 2 * m):
        if full[i % m] == full[(i - 1) % m]:
            cur += 1
        else:
            best = max(best, cur)
            cur = 1
        if best >= m:
            return m
    return max(best, cur if cur <= m else m)


@dataclass(frozen=True)
class Code:
    """First half (c_1..c_n) of an antisymmetric length-2n sign vector."""

    n: int
    half: tuple

    def __post_init__(self):
        if self.n < 3:
            raise InvalidCodeError(f"code needs n >= 3, got n={self.n}")
        if len(self.half) != self.n:
            raise InvalidCodeError(
                f"half code must have length n={self.n}, got {len(self.half)}"
            )
        if any(v not in (1, -1) for v in self.half):
            raise InvalidCodeError("code entries must be +1 or -1")
        if _max_cyclic_run(self.full()) > self.n - 2:
            raise InvalidCodeError(
                f"run of equal signs exceeds n-2={self.n - 2}: {self}"
            )

    @classmethod
    def from_string(cls, s: str) -> "Code":
        return cls(len(s), _parse_signs(s))

    @classmethod
    def from_full(cls, full: Sequence[int]) -> "Code":
        """Build from a full length-2n vector, checking antisymmetry."""
        if len(full) % 2 != 0:
            raise InvalidCodeError("full code must have even length")
        n = len(full) // 2
        for j in range(n):
            if full[n + j] != -full[j]:
                raise InvalidCodeError("full code is not antisymmetric")
        return cls(n, tuple(full[:n]))

    def full(self) -> tuple:
        """The complete cyclic sign vector of length 2n."""
        return tuple(self.half) + tuple(-v for v in self.half)

    def __str__(self) -> str:
        return _sign_str(self.half)


@dataclass(frozen=True)
class QuarterCode:
    """First n/2 entries of a half code with the axial symmetry
    c_{n-j+1} = -c_j."""

    n: int
    entries: tuple

    def __post_init__(self):
        if self.n < 4 or self.n % 4 != 0:
            raise InvalidCodeError(
                f"quarter codes need n divisible by 4, got n={self.n}"
            )
        if len(self.entries) != self.n // 2:
            raise InvalidCodeError(
                f"quarter code must have length n/2={self.n // 2}, "
                f"got {len(self.entries)}"
            )
        if any(v not in (1, -1) for v in self.entries):
            raise InvalidCodeError("quarter code entries must be +1 or -1")

    @classmethod
    def from_string(cls, s: str) -> "QuarterCode":
        return cls(2 * len(s), _parse_signs(s))

    def __str__(self) -> str:
        return _sign_str(self.entries)


@dataclass(frozen=True)
class Composition:
    """Odd-length tuple of positive integers summing to n (minus-run view)."""

    parts: tuple

    def __post_init__(self):
        if len(self.parts) < 3 or len(self.parts) % 2 == 0:
            raise InvalidCompositionError(
                f"composition length must be odd and >= 3, got {len(self.parts)}"
            )
        if any(p < 1 for p in self.parts):
            raise InvalidCompositionError("composition parts must be positive")

    @property
    def n(self) -> int:
        return sum(self.parts)

    @classmethod
    def from_string(cls, s: str) -> "Composition":
        return cls(tuple(int(p) for p in s.split(",")))

    def __str__(self) -> str:
        return ",".join(str(p) for p in self.parts)


def _dihedral_min_full(full: Sequence[int]) -> tuple:
    """Lexicographic minimum (+1 before -1) of a cyclic sign vector under
    all rotations and reflections."""
    m = len(full)
    doubled = tuple(full) + tuple(full)
    rev = tuple(reversed(full))
    rev_doubled = rev + rev
    best = None
    for base in (doubled, rev_doubled):
        for r in range(m):
            cand = base[r : r + m]
            if best is None:
                best = cand
                continue
            # +1 sorts before -1, so compare negated entries
            for x, y in zip(cand, best):
                if x != y:
                    if x > y:
                        best = cand
                    break
    return best


def canonicalize(code: Code) -> Code:
    """Canonical representative of the dihedral class of ``code``.

    Lexicographically smallest full vector (ordering +1 < -1) over all 2n
    rotations and 2n reflected rotations; idempotent.
    """
    best = _dihedral_min_full(code.full())
    return Code.from_full(best)


def equivalent(a: Code, b: Code) -> bool:
    """Whether two codes lie in the same dihedral class."""
    return a.n == b.n and _dihedral_min_full(a.full()) == _dihedral_min_full(b.full())


def _bracelet_to_composition(bracelet: Sequence[int]) -> tuple:
    """Gaps between consecutive ones of a cyclic binary string."""
    ones = [i for i, v in enumerate(bracelet) if v == 1]
    m = len(ones)
    n = len(bracelet)
    return tuple(
        (ones[(i + 1) % m] - ones[i]) % n or n for i in range(m)
    )


def enumerate_codes(n: int, prefix: Sequence[int] = ()) -> Iterator[Code]:
    """Stream every code class for polygons with n vertices, once each.

    Yields canonical ``Code`` objects; streaming, O(n) memory.  ``prefix``
    (over {0, 1}, marking minus-run starts in the underlying bracelet walk)
    splits the stream into disjoint partitions for parallel consumption.
    """
    if n < 3:
        raise ValueError(f"enumerate_codes needs n >= 3, got {n}")
    for b in code_bracelets(n, prefix):
        comp = Composition(_bracelet_to_composition(b))
        yield canonicalize(composition_to_code(comp, n))


def count_codes(n: int, prefix: Sequence[int] = ()) -> int:
    """Number of code classes for n vertices (same walk as enumerate_codes).

    Uses a compiled counting kernel when no prefix is given.
    """
    if n < 3:
        raise ValueError(f"count_codes needs n >= 3, got {n}")
    if prefix:
        return sum(1 for _ in code_bracelets(n, prefix))
    return count_code_bracelets_fast(n)


def code_to_composition(code: Code) -> Composition:
    """Minus-run lengths of the full cyclic code, as a canonical tuple.

    Canonical means lexicographically minimal over all rotations and
    reflections of the cyclic tuple.
    """
    full = code.full()
    m = len(full)
    start = None
    for i in range(m):
        if full[i] == -1 and full[(i - 1) % m] == 1:
            start = i
            break
    if start is None:  # cannot happen for a valid code
        raise InvalidCodeError("code has no sign changes")
    runs = []
    i = start
    seen = 0
    while seen < m:
        ln = 0
        while full[(i + ln) % m] == -1:
            ln += 1
        runs.append(ln)
        step = ln
        while full[(i + step) % m] == 1:
            step += 1
        seen += step
        i = (i + step) % m
    k = len(runs)
    best = None
    for base in (runs, runs[::-1]):
        for r in range(k):
            cand = tuple(base[r:] + base[:r])
            if best is None or cand < best:
                best = cand
    return Composition(best)


def composition_to_code(comp: Composition, n: int) -> Code:
    """Rebuild a code from its minus-run composition.

    Writes the minus-runs in order and fills the blank before run i with a
    plus-run whose length is the composition entry offset by half the
    (odd) length, which reproduces the antisymmetric full code.
    """
    if comp.n != n:
        raise InvalidCompositionError(
            f"parts sum to {comp.n}, expected n={n}"
        )
    parts = comp.parts
    m = len(parts)
    shift = (m - 1) // 2
    full = []
    for i in range(m):
        full.extend([1] * parts[(i + shift) % m])
        full.extend([-1] * parts[i])
    if len(full) != 2 * n:
        raise InvalidCompositionError("composition does not produce a full code")
    return Code.from_full(full)


def odd_divisor_code(n: int, d: int) -> Code:
    """The zero-residual code c_j = (-1)^ceil(j*d/n) for an odd divisor d of n."""
    if d < 3 or d % 2 == 0 or n % d != 0:
        raise InvalidDivisorError(
            f"d must be an odd divisor >= 3 of n, got n={n}, d={d}"
        )
    half = tuple((-1) ** (-(-j * d // n)) for j in range(1, n + 1))
    return Code(n, half)


def expand_quarter(q: QuarterCode) -> Code:
    """Half code of length n from a quarter code via c_{n-j+1} = -c_j."""
    h = len(q.entries)
    half = tuple(q.entries) + tuple(-q.entries[h - 1 - j] for j in range(h))
    return Code(q.n, half)
