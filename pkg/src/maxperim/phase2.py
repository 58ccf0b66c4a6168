"""Phase II: solve the fixed-code equality-constrained problem by
Lagrange-Newton iteration in arbitrary precision.

With the code fixed, the problem has free angles phi_2..phi_n (phi_1 = 0
and phi_{n+1} = pi pin the rotation) and two closure constraints.  The
iteration is w^{k+1} = w^k - A_k grad L(w^k) on w = (phi, y) where A_k
approximates the inverse of the KKT block matrix

    K(w) = [ H  C^T ]
           [ C   0  ],

H the tridiagonal Lagrangian Hessian and C the 2 x (n-1) constraint
Jacobian.  The gradient is always evaluated at full working precision;
the accuracy of A_k only affects the convergence rate, not the fixed
point.  Four realizations of A_k are provided:

* ``double-factor``: K rounded to hardware doubles, dense solve each
  iteration (linear convergence, roughly 15 digits per step);
* ``schur``: tridiagonal LDL^T of H plus a 2x2 Schur complement, all in
  working precision (quadratic convergence);
* ``minres``: n+1 MINRES iterations in working precision as a direct
  solver (quadratic convergence);
* ``simplified-schur`` / ``simplified-double``: the chosen factorization
  frozen at the initial iterate (at most linear convergence).

Inequalities (angle monotonicity) are dropped during the iteration and
checked after convergence.
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
import numpy as np
from gmpy2 import mpfr

from .codes import Code
from .precision import GUARD_BITS, vec_norm2, workprec

__all__ = [
    "AngleVector",
    "KktState",
    "KktMatrix",
    "NewtonReport",
    "VARIANTS",
    "NoConvergenceError",
    "SingularSystemError",
    "DimensionMismatchError",
    "DegenerateAnglesError",
    "init_regular",
    "kkt_gradient",
    "kkt_matrix",
    "newton_solve",
    "jacobian_rank_certificate",
    "perimeter",
    "lagrangian",
]

VARIANTS = (
    "double-factor",
    "schur",
    "minres",
    "simplified-schur",
    "simplified-double",
)


class NoConvergenceError(RuntimeError):
    """Newton iteration hit max_iter before reaching the tolerance."""

    def __init__(self, msg, state=None, report=None):
        super().__init__(msg)
        self.state = state
        self.report = report


class SingularSystemError(RuntimeError):
    """A matrix factorization broke down."""


class DimensionMismatchError(ValueError):
    """State and code sizes disagree."""


class DegenerateAnglesError(ValueError):
    """Angles are not strictly sorted inside (0, pi)."""


@dataclass(frozen=True)
class AngleVector:
    """Zonogon vertex angles phi_1..phi_{n+1} with the ends pinned."""

    n: int
    phi: tuple  # n+1 mpfr values
    precision_bits: int

    def __post_init__(self):
        if len(self.phi) != self.n + 1:
            raise DimensionMismatchError(
                f"need n+1={self.n + 1} angles, got {len(self.phi)}"
            )
        with workprec(self.precision_bits):
            if self.phi[0] != 0:
                raise ValueError("phi_1 must be exactly 0")
            if self.phi[-1] != gmpy2.const_pi():
                raise ValueError("phi_{n+1} must be exactly pi at the working precision")

    def is_strictly_sorted(self) -> bool:
        return all(a < b for a, b in zip(self.phi, self.phi[1:]))


@dataclass(frozen=True)
class KktState:
    """Newton iterate: angles plus the two multipliers."""

    angles: AngleVector
    y1: mpfr
    y2: mpfr

    @property
    def n(self) -> int:
        return self.angles.n

    @property
    def precision_bits(self) -> int:
        return self.angles.precision_bits


@dataclass(frozen=True)
class KktMatrix:
    """Structured KKT blocks: H symmetric tridiagonal, C two rows."""

    diag: tuple  # H_jj, j = 2..n            (n-1 entries)
    off: tuple  # H_{j,j+1}, j = 2..n-1      (n-2 entries)
    c1: tuple  # dg1/dphi_j                  (n-1 entries)
    c2: tuple  # dg2/dphi_j                  (n-1 entries)

    @property
    def size(self) -> int:
        return len(self.diag) + 2

    def dense(self) -> np.ndarray:
        """Float64 rendering of the full (n+1) x (n+1) saddle matrix."""
        m = len(self.diag)
        K = np.zeros((m + 2, m + 2))
        for i in range(m):
            K[i, i] = float(self.diag[i])
            if i + 1 < m:
                K[i, i + 1] = K[i + 1, i] = float(self.off[i])
            K[m, i] = K[i, m] = float(self.c1[i])
            K[m + 1, i] = K[i, m + 1] = float(self.c2[i])
        return K

    def matvec(self, x):
        """K @ x for x of length n+1, in working precision."""
        m = len(self.diag)
        out = [mpfr(0)] * (m + 2)
        for i in range(m):
            acc = self.diag[i] * x[i]
            if i > 0:
                acc += self.off[i - 1] * x[i - 1]
            if i + 1 < m:
                acc += self.off[i] * x[i + 1]
            acc += self.c1[i] * x[m] + self.c2[i] * x[m + 1]
            out[i] = acc
        out[m] = sum(self.c1[i] * x[i] for i in range(m))
        out[m + 1] = sum(self.c2[i] * x[i] for i in range(m))
        return out


def init_regular(n: int, precision_bits: int = 360) -> KktState:
    """Regular-2n-gon start: phi_j = (j-1) pi / n, multipliers zero.

    The objective at this point equals the perimeter upper bound
    2 n sin(pi / 2n).
    """
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    with workprec(precision_bits):
        pi = gmpy2.const_pi()
        # the last entry must be pi to the last bit, not n*(pi/n)
        phi = tuple(mpfr(j) * pi / n for j in range(n)) + (pi,)
    return KktState(AngleVector(n, phi, precision_bits), mpfr(0), mpfr(0))


def _check_sizes(state: KktState, code: Code):
    if state.n != code.n:
        raise DimensionMismatchError(
            f"state has n={state.n} but code has n={code.n}"
        )


def perimeter(angles: AngleVector) -> mpfr:
    """sum_j 2 sin((phi_{j+1} - phi_j)/2) at the angle vector's precision."""
    with workprec(angles.precision_bits):
        return sum(
            2 * gmpy2.sin((b - a) / 2) for a, b in zip(angles.phi, angles.phi[1:])
        )


def lagrangian(state: KktState, code: Code) -> mpfr:
    """L(phi, y) with the halved objective used by the KKT formulas."""
    _check_sizes(state, code)
    with workprec(state.precision_bits):
        phi = state.angles.phi
        f = -sum(gmpy2.sin((b - a) / 2) for a, b in zip(phi, phi[1:]))
        g1, g2 = constraints(state.angles, code)
        return f + state.y1 * g1 + state.y2 * g2


def constraints(angles: AngleVector, code: Code):
    """Closure constraints g1, g2 in the reordered form."""
    c = code.half
    n = code.n
    with workprec(angles.precision_bits):
        phi = angles.phi
        g1 = -mpfr(c[0] + c[n - 1])
        g2 = mpfr(0)
        for j in range(2, n + 1):
            dc = c[j - 2] - c[j - 1]
            if dc:
                g1 += dc * gmpy2.cos(phi[j - 1])
                g2 += dc * gmpy2.sin(phi[j - 1])
        return g1, g2


def kkt_gradient(state: KktState, code: Code) -> list:
    """grad L: (dL/dphi_2 .. dL/dphi_n, g1, g2), length n+1."""
    _check_sizes(state, code)
    c = code.half
    n = code.n
    with workprec(state.precision_bits):
        phi = state.angles.phi
        y1, y2 = state.y1, state.y2
        out = []
        for j in range(2, n + 1):
            val = (
                gmpy2.cos((phi[j] - phi[j - 1]) / 2)
                - gmpy2.cos((phi[j - 1] - phi[j - 2]) / 2)
            ) / 2
            dc = c[j - 2] - c[j - 1]
            if dc:
                val += dc * (y2 * gmpy2.cos(phi[j - 1]) - y1 * gmpy2.sin(phi[j - 1]))
            out.append(val)
        g1, g2 = constraints(state.angles, code)
        out.append(g1)
        out.append(g2)
        return out


def kkt_matrix(state: KktState, code: Code) -> KktMatrix:
    """Tridiagonal Hessian block and constraint Jacobian at ``state``.

    The Hessian is the second derivative of the Lagrangian used in
    ``kkt_gradient`` (so it matches finite differences of that gradient).
    """
    _check_sizes(state, code)
    c = code.half
    n = code.n
    with workprec(state.precision_bits):
        phi = state.angles.phi
        y1, y2 = state.y1, state.y2
        diag = []
        c1 = []
        c2 = []
        for j in range(2, n + 1):
            d = (
                gmpy2.sin((phi[j] - phi[j - 1]) / 2)
                + gmpy2.sin((phi[j - 1] - phi[j - 2]) / 2)
            ) / 4
            dc = c[j - 2] - c[j - 1]
            if dc:
                sin_j = gmpy2.sin(phi[j - 1])
                cos_j = gmpy2.cos(phi[j - 1])
                d += -dc * (y1 * cos_j + y2 * sin_j)
                c1.append(-dc * sin_j)
                c2.append(dc * cos_j)
            else:
                c1.append(mpfr(0))
                c2.append(mpfr(0))
            diag.append(d)
        # off-diagonal: -1/4 sin((phi_{j+1} - phi_j)/2), j = 2..n-1
        off = [-gmpy2.sin((phi[j] - phi[j - 1]) / 2) / 4 for j in range(2, n)]
        return KktMatrix(tuple(diag), tuple(off), tuple(c1), tuple(c2))


class _TridiagLDL:
    """LDL^T factorization of a symmetric tridiagonal matrix (no pivoting)."""

    def __init__(self, diag, off, precision_bits):
        self.m = len(diag)
        self.precision_bits = precision_bits
        with workprec(precision_bits):
            scale = max(abs(d) for d in diag)
            tiny = scale * mpfr(2) ** (-(precision_bits - GUARD_BITS))
            d = [mpfr(0)] * self.m
            l = [mpfr(0)] * max(self.m - 1, 0)
            d[0] = diag[0]
            for i in range(1, self.m):
                if abs(d[i - 1]) <= tiny:
                    raise SingularSystemError(
                        "tridiagonal pivot too small; Hessian block not factorizable"
                    )
                l[i - 1] = off[i - 1] / d[i - 1]
                d[i] = diag[i] - l[i - 1] * off[i - 1]
            if abs(d[self.m - 1]) <= tiny:
                raise SingularSystemError("tridiagonal pivot too small")
            self.d = d
            self.l = l

    def solve(self, rhs):
        with workprec(self.precision_bits):
            m = self.m
            z = [mpfr(0)] * m
            z[0] = rhs[0]
            for i in range(1, m):
                z[i] = rhs[i] - self.l[i - 1] * z[i - 1]
            for i in range(m):
                z[i] = z[i] / self.d[i]
            for i in range(m - 2, -1, -1):
                z[i] = z[i] - self.l[i] * z[i + 1]
            return z


class _SchurFactor:
    """Block elimination of the saddle matrix via H^{-1} and a 2x2 Schur
    complement, entirely in working precision."""

    def __init__(self, K: KktMatrix, precision_bits: int):
        self.precision_bits = precision_bits
        self.K = K
        self.h = _TridiagLDL(K.diag, K.off, precision_bits)
        with workprec(precision_bits):
            self.u1 = self.h.solve(list(K.c1))
            self.u2 = self.h.solve(list(K.c2))
            m = len(K.diag)
            a = sum(K.c1[i] * self.u1[i] for i in range(m))
            b = sum(K.c1[i] * self.u2[i] for i in range(m))
            cc = sum(K.c2[i] * self.u1[i] for i in range(m))
            d = sum(K.c2[i] * self.u2[i] for i in range(m))
            det = a * d - b * cc
            scale = max(abs(a), abs(b), abs(cc), abs(d), mpfr(1))
            if abs(det) <= scale * mpfr(2) ** (-(precision_bits - GUARD_BITS)):
                raise SingularSystemError("2x2 Schur complement is singular")
            self.cu = (a, b, cc, d)
            self.det = det

    def solve(self, g):
        with workprec(self.precision_bits):
            m = len(self.K.diag)
            gphi, gy1, gy2 = g[:m], g[m], g[m + 1]
            v = self.h.solve(list(gphi))
            r1 = sum(self.K.c1[i] * v[i] for i in range(m)) - gy1
            r2 = sum(self.K.c2[i] * v[i] for i in range(m)) - gy2
            a, b, cc, d = self.cu
            dy1 = (d * r1 - b * r2) / self.det
            dy2 = (a * r2 - cc * r1) / self.det
            dphi = [v[i] - self.u1[i] * dy1 - self.u2[i] * dy2 for i in range(m)]
            return dphi + [dy1, dy2]


class _DoubleFactor:
    """Hardware-double rendering of K; each solve routes the full-precision
    gradient through float64 with exact power-of-two scaling."""

    def __init__(self, K: KktMatrix, precision_bits: int):
        self.precision_bits = precision_bits
        dense = K.dense()
        if not np.isfinite(dense).all():
            raise SingularSystemError("KKT matrix does not fit in doubles")
        self.dense = dense

    def solve(self, g):
        with workprec(self.precision_bits):
            mx = max(abs(v) for v in g)
            if mx == 0:
                return [mpfr(0)] * len(g)
            e = int(gmpy2.floor(gmpy2.log2(mx)))
            scale = mpfr(2) ** (-e)
            rhs = np.array([float(v * scale) for v in g])
            try:
                sol = np.linalg.solve(self.dense, rhs)
            except np.linalg.LinAlgError as exc:
                raise SingularSystemError(str(exc)) from exc
            back = mpfr(2) ** e
            return [mpfr(float(v)) * back for v in sol]


class _MinresSolver:
    """n+1 MINRES iterations in working precision as a direct solver."""

    def __init__(self, K: KktMatrix, precision_bits: int):
        self.K = K
        self.precision_bits = precision_bits

    def solve(self, b):
        K = self.K
        iters = K.size
        with workprec(self.precision_bits):
            nn = len(b)
            x = [mpfr(0)] * nn
            beta = vec_norm2(b)
            if beta == 0:
                return x
            v = [bi / beta for bi in b]
            v_old = [mpfr(0)] * nn
            w = [mpfr(0)] * nn
            w_old = [mpfr(0)] * nn
            eta = beta
            s_old = mpfr(0)
            s_cur = mpfr(0)
            c_old = mpfr(1)
            c_cur = mpfr(1)
            gamma = beta
            for _ in range(iters):
                z = K.matvec(v)
                delta = sum(zi * vi for zi, vi in zip(z, v))
                z = [
                    zi - delta * vi - gamma * voi
                    for zi, vi, voi in zip(z, v, v_old)
                ]
                gamma_new = vec_norm2(z)
                a0 = c_cur * delta - c_old * s_cur * gamma
                a1 = gmpy2.sqrt(a0 * a0 + gamma_new * gamma_new)
                a2 = s_cur * delta + c_old * c_cur * gamma
                a3 = s_old * gamma
                if a1 == 0:
                    raise SingularSystemError("MINRES breakdown: singular system")
                c_new = a0 / a1
                s_new = gamma_new / a1
                w_new = [
                    (vi - a3 * woi - a2 * wi) / a1
                    for vi, woi, wi in zip(v, w_old, w)
                ]
                x = [xi + c_new * eta * wn for xi, wn in zip(x, w_new)]
                eta = -s_new * eta
                if gamma_new == 0:
                    break
                v_old = v
                v = [zi / gamma_new for zi in z]
                w_old = w
                w = w_new
                s_old, s_cur = s_cur, s_new
                c_old, c_cur = c_cur, c_new
                gamma = gamma_new
            return x


def _make_factor(variant: str, K: KktMatrix, precision_bits: int):
    if variant in ("schur", "simplified-schur"):
        try:
            return _SchurFactor(K, precision_bits)
        except SingularSystemError:
            # diagonal-magnitude fallback prescribed for the Schur route
            return _DoubleFactor(K, precision_bits)
    if variant in ("double-factor", "simplified-double"):
        return _DoubleFactor(K, precision_bits)
    if variant == "minres":
        return _MinresSolver(K, precision_bits)
    raise ValueError(f"unknown variant {variant!r}; pick one of {VARIANTS}")


@dataclass
class NewtonReport:
    """Outcome of one Lagrange-Newton run."""

    variant: str
    iterations: int
    increment_norms: list
    final_increment_norm: mpfr
    final_kkt_residual: mpfr
    perimeter: mpfr
    converged: bool
    monotone: bool
    precision_bits: int
    tol_bits: int


def newton_solve(
    code: Code,
    precision_bits: int = 360,
    tol_bits: int = 320,
    variant: str = "schur",
    max_iter: int = 64,
    increment_perturbation: float = 0.0,
):
    """Run the Lagrange-Newton iteration from the regular start.

    Returns (KktState, NewtonReport).  Raises ``NoConvergenceError`` when
    max_iter is exhausted (partial state attached to the exception) and
    ``SingularSystemError`` when no usable factorization exists.  A
    monotonicity violation of the converged angles is reported via the
    ``monotone`` flag, not an exception.

    ``increment_perturbation`` deterministically scales the computed
    increment components by (1 +/- eps); it exists to demonstrate that an
    inexact A_k moves the convergence rate, not the fixed point.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; pick one of {VARIANTS}")
    if precision_bits <= tol_bits + 32:
        raise ValueError(
            f"need precision_bits > tol_bits + 32 (got {precision_bits} vs {tol_bits})"
        )
    n = code.n
    state0 = init_regular(n, precision_bits)
    phi = list(state0.angles.phi)
    y1, y2 = state0.y1, state0.y2
    simplified = variant.startswith("simplified-")
    factor = _make_factor(variant, kkt_matrix(state0, code), precision_bits) if simplified else None

    norms = []
    converged = False
    with workprec(precision_bits):
        tol = mpfr(2) ** (-tol_bits)
        state = state0
        for _ in range(max_iter):
            g = kkt_gradient(state, code)
            if not simplified:
                factor = _make_factor(variant, kkt_matrix(state, code), precision_bits)
            delta = factor.solve(g)
            if increment_perturbation:
                eps = mpfr(increment_perturbation)
                delta = [
                    d * (1 + eps if i % 2 == 0 else 1 - eps)
                    for i, d in enumerate(delta)
                ]
            for j in range(2, n + 1):
                phi[j - 1] = phi[j - 1] - delta[j - 2]
            y1 = y1 - delta[n - 1]
            y2 = y2 - delta[n]
            state = KktState(
                AngleVector(n, tuple(phi), precision_bits), y1, y2
            )
            dn = vec_norm2(delta)
            norms.append(dn)
            if dn < tol:
                converged = True
                break
        final_grad = kkt_gradient(state, code)
        residual = vec_norm2(final_grad)
        monotone = state.angles.is_strictly_sorted()
        report = NewtonReport(
            variant=variant,
            iterations=len(norms),
            increment_norms=norms,
            final_increment_norm=norms[-1] if norms else mpfr(0),
            final_kkt_residual=residual,
            perimeter=perimeter(state.angles),
            converged=converged,
            monotone=monotone,
            precision_bits=precision_bits,
            tol_bits=tol_bits,
        )
    if not converged:
        raise NoConvergenceError(
            f"no convergence for code {code} after {max_iter} {variant} iterations",
            state=state,
            report=report,
        )
    return state, report


def jacobian_rank_certificate(state: KktState, code: Code, check: bool = True) -> mpfr:
    """det(C C^T), verified against the closed form
    16 * sum_{i<j in J} sin^2(phi_i - phi_j) over the sign-change set J."""
    _check_sizes(state, code)
    phi = state.angles.phi
    n = code.n
    if check:
        inner = phi[1:-1]
        if not all(a < b for a, b in zip(inner, inner[1:])):
            raise DegenerateAnglesError("angles phi_2..phi_n must be strictly sorted")
        with workprec(state.precision_bits):
            if not (phi[1] > 0 and phi[n - 1] < gmpy2.const_pi()):
                raise DegenerateAnglesError("angles must lie strictly inside (0, pi)")
    K = kkt_matrix(state, code)
    with workprec(state.precision_bits):
        m = len(K.c1)
        a = sum(v * v for v in K.c1)
        b = sum(x * y for x, y in zip(K.c1, K.c2))
        d = sum(v * v for v in K.c2)
        det = a * d - b * b
        c = code.half
        J = [j for j in range(2, n + 1) if c[j - 2] != c[j - 1]]
        closed = mpfr(0)
        for ii in range(len(J)):
            for jj in range(ii + 1, len(J)):
                s = gmpy2.sin(phi[J[ii] - 1] - phi[J[jj] - 1])
                closed += s * s
        closed *= 16
        scale = max(abs(det), abs(closed), mpfr(1))
        if abs(det - closed) > scale * mpfr(2) ** (-(state.precision_bits - 24)):
            raise AssertionError(
                "det(C C^T) disagrees with its closed form beyond rounding"
            )
        return det
