import random

import gmpy2
import pytest
from gmpy2 import mpc, mpfr

from maxperim.codes import (
    Code,
    QuarterCode,
    canonicalize,
    equivalent,
    expand_quarter,
    odd_divisor_code,
)
from maxperim.geometry import (
    CodeMismatchError,
    DegenerateZonogonError,
    NotClosedError,
    PolygonSolution,
    diameter_graph,
    polygon_diameter,
    polygon_perimeter,
    reconstruct,
    upper_bound,
    zonogon_check,
)
from maxperim.phase2 import AngleVector, init_regular, newton_solve
from maxperim.precision import to_decimal, workprec

from reference_values import PERIMETER_GAPS, PERIMETERS

OCTAGON = expand_quarter(QuarterCode.from_string("+--+"))


@pytest.fixture(scope="module")
def octagon_poly():
    state, _ = newton_solve(OCTAGON, 360, 320, "schur")
    return reconstruct(OCTAGON, state.angles, tol_bits=320)


# ------------------------------------------------------------ upper bound

def test_upper_bound_values():
    with workprec(256):
        assert abs(upper_bound(4, 256) - 8 * gmpy2.sin(gmpy2.const_pi() / 8)) == 0
        assert upper_bound(3, 256) < gmpy2.const_pi()
        assert upper_bound(1024, 256) < gmpy2.const_pi()


def test_upper_bound_gap_published_values(octagon_poly):
    assert float(octagon_poly.gap) == pytest.approx(PERIMETER_GAPS[8], rel=5e-4)


# ----------------------------------------------------------- reconstruct

def test_reconstruct_published_octagon(octagon_poly):
    assert octagon_poly.n == 8
    got = to_decimal(octagon_poly.perimeter, 360)
    assert got.startswith(PERIMETERS[8][:95])
    assert float(octagon_poly.diameter()) == pytest.approx(1.0, abs=1e-50)


def test_reconstruct_attains_bound_for_odd_divisor_codes():
    for n, d in ((6, 3), (9, 9), (12, 3)):
        st = init_regular(n, 256)
        poly = reconstruct(odd_divisor_code(n, d), st.angles, tol_bits=200)
        with workprec(256):
            assert abs(poly.gap) < mpfr(2) ** -240


def test_reconstruct_rejects_nonconverged_angles():
    # regular angles with a power-of-two code do not close the boundary
    st = init_regular(8, 256)
    with pytest.raises(NotClosedError):
        reconstruct(OCTAGON, st.angles, tol_bits=200)


def test_reconstruct_perimeter_consistency(octagon_poly):
    per_direct = polygon_perimeter(octagon_poly.vertices, 360)
    with workprec(360):
        assert abs(per_direct - octagon_poly.perimeter) < mpfr(2) ** -300
        phi = octagon_poly.angles.phi
        per_trig = sum(2 * gmpy2.sin((b - a) / 2) for a, b in zip(phi, phi[1:]))
        assert abs(per_trig - octagon_poly.perimeter) < mpfr(2) ** (-320 + 8)


def test_rigid_motion_invariance(octagon_poly):
    with workprec(360):
        rot = gmpy2.exp(mpc(0, 1) * mpfr("0.7"))
        shift = mpc(mpfr("-0.3"), mpfr("0.45"))
        moved = tuple(rot * v + shift for v in octagon_poly.vertices)
        assert abs(
            polygon_perimeter(moved, 360) - octagon_poly.perimeter
        ) < mpfr(2) ** -300
        assert abs(
            polygon_diameter(moved, 360) - octagon_poly.diameter()
        ) < mpfr(2) ** -300


def test_reconstruct_requires_sorted_angles():
    st = init_regular(8, 256)
    phi = list(st.angles.phi)
    phi[2], phi[3] = phi[3], phi[2]
    with pytest.raises(ValueError):
        reconstruct(OCTAGON, AngleVector(8, tuple(phi), 256), tol_bits=200)


# -------------------------------------------------------- diameter graph

def test_octagon_diameter_graph_structure(octagon_poly):
    g = diameter_graph(octagon_poly)
    assert len(g.edges) == 8
    assert len(g.pending_vertices()) == 3
    cyc = g.pruned_cycle()
    assert cyc is not None and len(cyc) == 5
    assert g.is_single_odd_cycle_with_pendants()


def test_quadrilateral_diameter_graph():
    code = expand_quarter(QuarterCode.from_string("+-"))
    state, _ = newton_solve(code, 360, 320, "schur")
    poly = reconstruct(code, state.angles, tol_bits=320)
    g = diameter_graph(poly)
    assert len(g.edges) == 4
    assert len(g.pruned_cycle()) == 3
    assert len(g.pending_vertices()) == 1


def test_equilateral_triangle_diameter_graph():
    with workprec(256):
        pts = tuple(
            gmpy2.exp(mpc(0, 1) * (gmpy2.const_pi() * (2 * k) / 3))
            / gmpy2.sqrt(mpfr(3))
            for k in range(3)
        )
        poly = PolygonSolution(
            n=3,
            code=odd_divisor_code(3, 3),
            vertices=pts,
            perimeter=polygon_perimeter(pts, 256),
            gap=mpfr(0),
            precision_bits=256,
            tol_bits=128,
        )
    g = diameter_graph(poly)
    assert len(g.edges) == 3
    assert len(g.pruned_cycle()) == 3
    assert g.pending_vertices() == ()


def test_cycle_length_equals_composition_length():
    from maxperim.codes import code_to_composition

    for qc in ("+-", "+--+", "+--+-++-"):
        code = expand_quarter(QuarterCode.from_string(qc))
        state, _ = newton_solve(code, 360, 320, "schur")
        poly = reconstruct(code, state.angles, tol_bits=320)
        g = diameter_graph(poly)
        assert len(g.pruned_cycle()) == len(code_to_composition(code).parts)
        assert len(g.edges) == code.n


# --------------------------------------------------------------- zonogon

def test_zonogon_roundtrip_octagon(octagon_poly):
    rep = zonogon_check(octagon_poly)
    assert rep.vertex_count == 16
    assert rep.is_small
    assert rep.centrally_symmetric
    assert rep.code_equivalent
    assert equivalent(rep.recovered_code, Code.from_string("+--+-++-"))


def test_zonogon_detects_scaled_up_polygon(octagon_poly):
    grown = tuple(v * mpfr("1.01") for v in octagon_poly.vertices)
    fake = PolygonSolution(
        n=8,
        code=octagon_poly.code,
        vertices=grown,
        perimeter=octagon_poly.perimeter,
        gap=octagon_poly.gap,
        precision_bits=octagon_poly.precision_bits,
        tol_bits=octagon_poly.tol_bits,
    )
    rep = zonogon_check(fake)
    assert not rep.is_small
    assert rep.max_modulus > 1


def test_zonogon_code_mismatch_raises(octagon_poly):
    other = canonicalize(expand_quarter(QuarterCode.from_string("+-+-")))
    fake = PolygonSolution(
        n=8,
        code=other,
        vertices=octagon_poly.vertices,
        perimeter=octagon_poly.perimeter,
        gap=octagon_poly.gap,
        precision_bits=octagon_poly.precision_bits,
        tol_bits=octagon_poly.tol_bits,
    )
    with pytest.raises(CodeMismatchError):
        zonogon_check(fake)


def test_zonogon_degenerate_parallel_sides():
    # a centrally symmetric hexagon has parallel sides; its difference
    # body collapses vertices
    with workprec(128):
        pts = []
        for k in range(6):
            ang = gmpy2.const_pi() * (2 * k + 1) / 6
            pts.append(mpc(gmpy2.cos(ang), gmpy2.sin(ang)) * mpfr("0.5"))
        poly = PolygonSolution(
            n=6,
            code=odd_divisor_code(6, 3),
            vertices=tuple(pts),
            perimeter=polygon_perimeter(pts, 128),
            gap=mpfr(0),
            precision_bits=128,
            tol_bits=64,
        )
    with pytest.raises(DegenerateZonogonError):
        zonogon_check(poly)


# --------------------------------------------------- smallness equivalence

def random_convex_polygon(rng, max_vertices=10):
    """Convex hull of random points, scaled to a target diameter."""
    while True:
        pts = [
            (rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(max_vertices)
        ]
        hull = _hull_floats(pts)
        if len(hull) >= 3:
            return hull


def _hull_floats(pts):
    pts = sorted(set(pts))

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2:
                (ax, ay), (bx, by) = out[-2], out[-1]
                if (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax) <= 0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(pts)
    upper = half(list(reversed(pts)))
    return lower[:-1] + upper[:-1]


def test_smallness_equivalence_on_random_polygons():
    # zonogon-in-unit-disc <=> all pairwise distances <= 1, both directions,
    # across polygons scaled to diameters around one
    rng = random.Random(42)
    checked = 0
    while checked < 200:
        hull = random_convex_polygon(rng)
        diam = max(
            ((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2) ** 0.5
            for i, a in enumerate(hull)
            for b in hull[i + 1 :]
        )
        target = rng.choice((0.7, 0.95, 1.0, 1.05, 1.4))
        scale = target / diam
        with workprec(128):
            verts = [mpc(mpfr(x * scale), mpfr(y * scale)) for x, y in hull]
            # zonogon max modulus over all difference points
            zmax = mpfr(0)
            for i, a in enumerate(verts):
                for b in verts:
                    if a is b:
                        continue
                    m = abs(a - b)
                    if m > zmax:
                        zmax = m
            pdiam = polygon_diameter(verts, 128)
            assert (zmax <= 1) == (pdiam <= 1)
            assert abs(zmax - pdiam) < mpfr(2) ** -100
        checked += 1


def test_zonogon_max_modulus_equals_polygon_diameter(octagon_poly):
    rep = zonogon_check(octagon_poly)
    with workprec(360):
        assert abs(rep.max_modulus - octagon_poly.diameter()) < mpfr(2) ** -300
