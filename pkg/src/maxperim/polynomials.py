"""Integer polynomial certificates for the octagon optima.

Two polynomials are shipped as a checked JSON resource:

* ``E8`` (degree 6): its relevant root is the side length s of the
  longest-perimeter equilateral small octagon (perimeter 8 s).
* ``P8`` (degree 48): its relevant root is the square of the maximum
  octagon perimeter.

Coefficients are stored ascending by degree, serialized as strings to
dodge any integer-size surprises, and guarded by SHA-256 digests frozen
at transcription time.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources

from gmpy2 import mpfr

from .precision import workprec

__all__ = [
    "IntegerPolynomial",
    "POLYNOMIALS",
    "APPROX_ROOTS",
    "load_polynomials",
    "verify_digests",
]

_EXPECTED_DIGESTS = {
    "E8": "f8a5673a4adee9d59630adfe27662915509abc55c0fbd71df297efa627afc2d7",
    "P8": "12c727abb3a3ae017662bb3ff038a19e0510f313fdb0028b8e545309a81ad4e7",
}

#: Seeds for root refinement; the printed approximations being validated.
#: Both polynomials annihilate the *square* of the quoted quantity.
APPROX_ROOTS = {
    "E8": "0.14973120385078412",  # squared side length; 8*sqrt ~ 3.095609317476962
    "P8": "9.7415594324498988",  # squared maximum perimeter (~3.12114713405983^2)
}


@dataclass(frozen=True)
class IntegerPolynomial:
    """Exact integer coefficients, ascending degree."""

    name: str
    coefficients: tuple

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x: mpfr) -> mpfr:
        """Horner evaluation; exact integer coefficients against mpfr x."""
        acc = mpfr(0)
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def derivative_at(self, x: mpfr) -> mpfr:
        acc = mpfr(0)
        for i in range(self.degree, 0, -1):
            acc = acc * x + i * self.coefficients[i]
        return acc

    def refine_root(self, seed, precision_bits: int = 360, steps: int = 64) -> mpfr:
        """Newton refinement of a simple root starting from ``seed``."""
        with workprec(precision_bits + 16):
            x = mpfr(seed)
            tol = mpfr(2) ** (-(precision_bits - 8))
            for _ in range(steps):
                step = self(x) / self.derivative_at(x)
                x -= step
                if abs(step) < tol * max(abs(x), mpfr(1)):
                    break
            return x

    def digest(self) -> str:
        payload = ",".join(str(c) for c in self.coefficients).encode()
        return hashlib.sha256(payload).hexdigest()


def load_polynomials() -> dict:
    """Load the coefficient resource and validate the frozen digests."""
    raw = resources.files("maxperim.data").joinpath("octagon_polynomials.json")
    data = json.loads(raw.read_text())
    out = {}
    for name, coeffs in data.items():
        poly = IntegerPolynomial(name, tuple(int(c) for c in coeffs))
        got = poly.digest()
        want = _EXPECTED_DIGESTS.get(name)
        if got != want:
            raise AssertionError(
                f"polynomial {name}: coefficient digest {got} != expected {want}"
            )
        out[name] = poly
    return out


POLYNOMIALS = load_polynomials()


def verify_digests() -> dict:
    """Recompute the digests of the loaded polynomials (raises on damage)."""
    out = {}
    for name, poly in POLYNOMIALS.items():
        got = poly.digest()
        if got != _EXPECTED_DIGESTS[name]:
            raise AssertionError(f"coefficient digest mismatch for {name}")
        out[name] = got
    return out
