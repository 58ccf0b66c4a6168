"""Arbitrary-precision arithmetic helpers built on gmpy2 (MPFR/MPC).

All high-precision code in this package funnels through these helpers so
that the working precision is always explicit.  Functions either take a
``precision_bits`` argument or operate inside a ``workprec`` block.
"""

from __future__ import annotations

import gmpy2
from gmpy2 import mpfr

#: Guard bits added on top of a requested precision for intermediate work.
GUARD_BITS = 8


def workprec(precision_bits: int):
    """Context manager setting the gmpy2 working precision.

    Usage::

        with workprec(360):
            x = gmpy2.sin(const_pi() / 8)
    """
    if precision_bits < 2:
        raise ValueError(f"precision_bits must be >= 2, got {precision_bits}")
    return gmpy2.context(precision=precision_bits)


def const_pi() -> mpfr:
    """pi at the current working precision."""
    return gmpy2.const_pi()


def to_mpfr(x) -> mpfr:
    """Convert ints/floats/decimal strings to mpfr at the current precision."""
    return mpfr(x)


def decimal_digits_for(precision_bits: int) -> int:
    """Number of decimal digits that round-trips ``precision_bits`` bits.

    ceil(bits * log10(2)) + 2, per the serialization contract.
    """
    return -(-precision_bits * 302 // 1000) + 2


def to_decimal(x, precision_bits: int, digits: int | None = None) -> str:
    """Render an mpfr as a fixed-point decimal string.

    Round-to-nearest with a digit count derived from the precision, so the
    same value always renders to the same bytes.
    """
    if digits is None:
        digits = decimal_digits_for(precision_bits)
    with workprec(max(precision_bits, 64) + GUARD_BITS):
        return format(mpfr(x), f".{digits}f")


def to_scientific(x, sig_digits: int = 12) -> str:
    """Scientific-notation rendering of an mpfr, e.g. '3.409e-05'.

    Built from mpfr.digits() because gmpy2's '.Ne' format spec is
    unreliable across versions.
    """
    v = mpfr(x)
    if v == 0:
        return "0." + "0" * (sig_digits - 1) + "e+00"
    ds, exp, _ = v.digits(10, sig_digits)
    sign = ""
    if ds.startswith("-"):
        sign = "-"
        ds = ds[1:]
    mantissa = ds[0] + ("." + ds[1:] if len(ds) > 1 else "")
    return f"{sign}{mantissa}e{exp - 1:+03d}"


def bits_agreement(a, b) -> float:
    """How many bits of agreement two mpfr values share.

    Returns +inf for exactly equal values.  Uses |a - b| relative to
    max(|a|, |b|, 1).
    """
    with workprec(max(a.precision, b.precision) + GUARD_BITS):
        diff = abs(a - b)
        if diff == 0:
            return float("inf")
        scale = max(abs(a), abs(b), mpfr(1))
        return float(-gmpy2.log2(diff / scale))


def vec_norm2(vec) -> mpfr:
    """Euclidean norm of a sequence of mpfr values."""
    acc = mpfr(0)
    for v in vec:
        acc += v * v
    return gmpy2.sqrt(acc)


def vec_norm_inf(vec) -> mpfr:
    """Max-norm of a sequence of mpfr values."""
    m = mpfr(0)
    for v in vec:
        av = abs(v)
        if av > m:
            m = av
    return m
