"""Polygon and zonogon reconstruction and verification.

Given a code and solved angles, the zonogon vertices are z_j = exp(i phi_j)
and the polygon side vectors are s_j = c_j (z_{j+1} - z_j).  Walking the
full length-2n code and appending the side s_{(p-1) mod n + 1} at every
+1 position traverses the polygon boundary counterclockwise (the +1
positions list the sides in slope order).  All geometric claims are then
checked directly on the vertices: closure, convexity, smallness, the
diameter graph structure, and the zonogon round trip back to the code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import gmpy2
from gmpy2 import mpc, mpfr

from .codes import Code, canonicalize, equivalent
from .phase2 import AngleVector
from .precision import to_scientific, workprec

__all__ = [
    "PolygonSolution",
    "DiameterGraph",
    "ZonogonReport",
    "NotClosedError",
    "NotConvexError",
    "NotSmallError",
    "CodeMismatchError",
    "DegenerateZonogonError",
    "reconstruct",
    "diameter_graph",
    "zonogon_check",
    "upper_bound",
    "polygon_perimeter",
    "polygon_diameter",
]


class NotClosedError(RuntimeError):
    """Boundary does not close; the angles are not converged."""


class NotConvexError(RuntimeError):
    """Vertex chain is not strictly convex in ccw order."""


class NotSmallError(RuntimeError):
    """Diameter exceeds one beyond tolerance."""


class CodeMismatchError(RuntimeError):
    """Zonogon traversal recovered a code not equivalent to the input."""


class DegenerateZonogonError(RuntimeError):
    """Zonogon vertices are degenerate (e.g. parallel polygon sides)."""


def upper_bound(n: int, precision_bits: int = 360) -> mpfr:
    """Perimeter upper bound 2 n sin(pi / 2n); strictly below pi."""
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    with workprec(precision_bits):
        return 2 * n * gmpy2.sin(gmpy2.const_pi() / (2 * n))


def polygon_perimeter(vertices: Sequence[mpc], precision_bits: int = 360) -> mpfr:
    with workprec(precision_bits):
        n = len(vertices)
        return sum(
            abs(vertices[(i + 1) % n] - vertices[i]) for i in range(n)
        )


def polygon_diameter(vertices: Sequence[mpc], precision_bits: int = 360) -> mpfr:
    with workprec(precision_bits):
        best = mpfr(0)
        n = len(vertices)
        for i in range(n):
            for j in range(i + 1, n):
                d = abs(vertices[j] - vertices[i])
                if d > best:
                    best = d
        return best


@dataclass(frozen=True)
class PolygonSolution:
    """A reconstructed, geometrically verified polygon."""

    n: int
    code: Code
    vertices: tuple  # n mpc points, ccw, first vertex at the origin
    perimeter: mpfr  # sum of side lengths
    gap: mpfr  # upper_bound(n) - perimeter
    precision_bits: int
    tol_bits: int
    angles: Optional[AngleVector] = None

    def diameter(self) -> mpfr:
        return polygon_diameter(self.vertices, self.precision_bits)


def _cross(a: mpc, b: mpc) -> mpfr:
    return a.real * b.imag - a.imag * b.real


def reconstruct(
    code: Code, angles: AngleVector, tol_bits: Optional[int] = None
) -> PolygonSolution:
    """Build and verify the polygon for a code and its solved angles.

    Checks, in order: the boundary closes (defect below 2^-(tol_bits-8)),
    the ccw vertex chain is strictly convex, and the diameter does not
    exceed one beyond tolerance.
    """
    if code.n != angles.n:
        raise ValueError(f"code has n={code.n}, angles have n={angles.n}")
    if not all(a < b for a, b in zip(angles.phi, angles.phi[1:])):
        raise ValueError("angles must be strictly sorted")
    n = code.n
    prec = angles.precision_bits
    if tol_bits is None:
        tol_bits = max(prec - 40, 32)
    with workprec(prec):
        tol = mpfr(2) ** (-(tol_bits - 8))
        z = [
            mpc(gmpy2.cos(p), gmpy2.sin(p)) for p in angles.phi
        ]  # z_1..z_{n+1} on the unit circle
        s = [code.half[j] * (z[j + 1] - z[j]) for j in range(n)]
        defect = abs(sum(s))
        if defect > tol:
            raise NotClosedError(
                f"closure defect {to_scientific(defect, 4)} exceeds tolerance {to_scientific(tol, 4)}"
            )
        full = code.full()
        verts = [mpc(0)]
        for p in range(2 * n):
            if full[p] == 1:
                verts.append(verts[-1] + s[p % n])
        if len(verts) != n + 1:
            raise NotConvexError("traversal did not produce n sides")
        verts = verts[:n]
        for i in range(n):
            e1 = verts[(i + 1) % n] - verts[i]
            e2 = verts[(i + 2) % n] - verts[(i + 1) % n]
            if not _cross(e1, e2) > 0:
                raise NotConvexError(f"non-left turn at vertex {(i + 1) % n}")
        diam = polygon_diameter(verts, prec)
        if diam > 1 + tol:
            raise NotSmallError(f"diameter {diam:.6f} exceeds 1")
        per_sides = sum(abs(v) for v in s)
        per_trig = sum(
            2 * gmpy2.sin((b - a) / 2) for a, b in zip(angles.phi, angles.phi[1:])
        )
        if abs(per_sides - per_trig) > tol:
            raise AssertionError("side-length and angle perimeters disagree")
        gap = upper_bound(n, prec) - per_sides
        return PolygonSolution(
            n=n,
            code=code,
            vertices=tuple(verts),
            perimeter=per_sides,
            gap=gap,
            precision_bits=prec,
            tol_bits=tol_bits,
            angles=angles,
        )


@dataclass(frozen=True)
class DiameterGraph:
    """Unit-distance graph on the polygon vertices."""

    n: int
    edges: tuple  # (k, l) 0-based vertex indices, k < l

    def degrees(self) -> list:
        deg = [0] * self.n
        for k, l in self.edges:
            deg[k] += 1
            deg[l] += 1
        return deg

    def pending_vertices(self) -> tuple:
        """Vertices incident to exactly one unit-distance edge."""
        deg = self.degrees()
        return tuple(i for i in range(self.n) if deg[i] == 1)

    def pruned_cycle(self) -> Optional[tuple]:
        """The vertex cycle left after removing degree-1 vertices, or None
        if the remainder is not a single cycle."""
        red = set(self.pending_vertices())
        kept = [e for e in self.edges if e[0] not in red and e[1] not in red]
        nodes = sorted({v for e in kept for v in e})
        if not nodes:
            return None
        adj = {v: [] for v in nodes}
        for k, l in kept:
            adj[k].append(l)
            adj[l].append(k)
        if any(len(a) != 2 for a in adj.values()):
            return None
        cycle = [nodes[0]]
        prev = None
        while True:
            nxt = [v for v in adj[cycle[-1]] if v != prev]
            if not nxt:
                return None
            prev = cycle[-1]
            cycle.append(nxt[0])
            if cycle[-1] == cycle[0]:
                break
            if len(cycle) > len(nodes) + 1:
                return None
        cycle = cycle[:-1]
        if len(cycle) != len(nodes):
            return None
        return tuple(cycle)

    def is_single_odd_cycle_with_pendants(self) -> bool:
        cyc = self.pruned_cycle()
        return cyc is not None and len(cyc) % 2 == 1


def diameter_graph(poly: PolygonSolution, tol: Optional[mpfr] = None) -> DiameterGraph:
    """All vertex pairs within ``tol`` of unit distance.

    Default tolerance 2^-(tol_bits/2): converged solutions place their
    diameters at unit length up to the Newton tolerance, far inside it.
    """
    with workprec(poly.precision_bits):
        if tol is None:
            tol = mpfr(2) ** (-(poly.tol_bits // 2))
        edges = []
        vs = poly.vertices
        for i in range(poly.n):
            for j in range(i + 1, poly.n):
                if abs(abs(vs[j] - vs[i]) - 1) <= tol:
                    edges.append((i, j))
        return DiameterGraph(poly.n, tuple(edges))


@dataclass(frozen=True)
class ZonogonReport:
    """Outcome of the zonogon verification."""

    n: int
    max_modulus: mpfr
    is_small: bool
    vertex_count: int
    centrally_symmetric: bool
    recovered_code: Code
    code_equivalent: bool


def _convex_hull(points: list) -> list:
    """Andrew monotone chain on exact mpfr coordinates; strict turns only."""
    pts = sorted(set(points), key=lambda p: (p[0], p[1]))
    if len(pts) < 3:
        raise DegenerateZonogonError("too few distinct difference points")

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2:
                ax, ay = out[-2]
                bx, by = out[-1]
                cr = (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax)
                if cr <= 0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(pts)
    upper = half(list(reversed(pts)))
    return lower[:-1] + upper[:-1]


def zonogon_check(poly: PolygonSolution, tol: Optional[mpfr] = None) -> ZonogonReport:
    """Verify the zonogon of a polygon and recover its code.

    Builds all pairwise vertex differences, confirms the maximum modulus
    stays within 1 + tol (smallness), that the convex hull has exactly 2n
    nondegenerate, centrally symmetric vertices, and that traversing the
    hull reproduces a code equivalent to the input.
    """
    n = poly.n
    with workprec(poly.precision_bits):
        if tol is None:
            tol = mpfr(2) ** (-(poly.tol_bits // 2))
        labels = {}
        points = []
        max_mod = mpfr(0)
        vs = poly.vertices
        for k in range(n):
            for l in range(n):
                if k == l:
                    continue
                d = vs[k] - vs[l]
                key = (d.real, d.imag)
                labels.setdefault(key, []).append((k, l))
                points.append(key)
                m = abs(d)
                if m > max_mod:
                    max_mod = m
        is_small = max_mod <= 1 + tol
        hull = _convex_hull(points)
        if len(hull) != 2 * n:
            raise DegenerateZonogonError(
                f"zonogon has {len(hull)} vertices, expected {2 * n}"
            )
        hull_set = set(hull)
        symmetric = all((-x, -y) in hull_set for x, y in hull)
        for key in hull:
            if len(labels[key]) != 1:
                raise DegenerateZonogonError(
                    "a zonogon vertex is realized by several vertex pairs"
                )
        signs = []
        for i in range(2 * n):
            k1, l1 = labels[hull[i]][0]
            k2, l2 = labels[hull[(i + 1) % (2 * n)]][0]
            if k2 == (k1 + 1) % n and l2 == l1:
                signs.append(1)
            elif l2 == (l1 + 1) % n and k2 == k1:
                signs.append(-1)
            else:
                raise DegenerateZonogonError(
                    "hull traversal is not a unit index advance"
                )
        recovered = canonicalize(Code.from_full(signs))
        same = equivalent(recovered, poly.code)
        if not same:
            raise CodeMismatchError(
                f"recovered code {recovered} is not equivalent to {poly.code}"
            )
        return ZonogonReport(
            n=n,
            max_modulus=max_mod,
            is_small=is_small,
            vertex_count=len(hull),
            centrally_symmetric=symmetric,
            recovered_code=recovered,
            code_equivalent=same,
        )
