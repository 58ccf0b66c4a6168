"""Solution records and serialization (JSON, CSV, SVG, TikZ).

A record's data payload is canonical: fixed decimal rendering derived
from the precision, sorted keys, no whitespace.  Timing information lives
in a separate ``timings`` block that is excluded from the canonical bytes,
so identical flags always produce identical payload bytes.
"""

from __future__ import annotations

import json

import gmpy2
from gmpy2 import mpfr

from .codes import Code
from .geometry import PolygonSolution, diameter_graph, reconstruct
from .phase2 import AngleVector
from .pipeline import TwoPhaseResult
from .precision import decimal_digits_for, to_decimal, workprec

__all__ = [
    "SCHEMA_VERSION",
    "UnverifiedRecordError",
    "build_record",
    "canonical_json",
    "angles_from_record",
    "polygon_from_record",
    "export",
]

SCHEMA_VERSION = 1

EXPORT_FORMATS = ("json", "csv", "svg", "tikz")


class UnverifiedRecordError(RuntimeError):
    """Record lacks the data needed for a verified geometric export."""


def build_record(result: TwoPhaseResult) -> dict:
    """Serializable record for a finished two-phase (or fixed-code) run."""
    prec = result.state.precision_bits
    digits = decimal_digits_for(prec)
    rec = {
        "schema_version": SCHEMA_VERSION,
        "n": result.n,
        "code": str(result.code),
        "quarter_code": result.quarter,
        "angles": [to_decimal(p, prec, digits) for p in result.state.angles.phi],
        "multipliers": [
            to_decimal(result.state.y1, prec, digits),
            to_decimal(result.state.y2, prec, digits),
        ],
        "perimeter": to_decimal(result.solution.perimeter, prec, digits),
        "gap": to_decimal(result.solution.gap, prec, digits),
        "precision_bits": prec,
        "tol_bits": result.solution.tol_bits,
        "variant": result.report.variant,
        "iterations": result.report.iterations,
        "timings": dict(result.timings),
    }
    if result.ssp is not None:
        num = result.ssp.gap_numerator
        rec["phase1"] = {
            "gap_decimal": result.ssp.gap_decimal(),
            "gap_numerator": str(num) if num is not None else None,
            "nodes": result.ssp.nodes_visited,
            "arithmetic": result.ssp.arithmetic,
        }
    return rec


def canonical_json(record: dict) -> bytes:
    """Canonical payload bytes: sorted keys, no volatile metadata."""
    payload = {k: v for k, v in record.items() if k != "timings"}
    return (json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n").encode()


def angles_from_record(record: dict) -> AngleVector:
    """Rebuild the angle vector; the pinned ends are restored exactly."""
    prec = record["precision_bits"]
    n = record["n"]
    with workprec(prec):
        phi = [mpfr(s) for s in record["angles"]]
        phi[0] = mpfr(0)
        phi[-1] = gmpy2.const_pi()
    return AngleVector(n, tuple(phi), prec)


def polygon_from_record(record: dict) -> PolygonSolution:
    """Re-verify the record geometrically; raises if it does not verify."""
    if not record.get("angles"):
        raise UnverifiedRecordError("record has no angles to verify")
    code = Code.from_string(record["code"])
    angles = angles_from_record(record)
    return reconstruct(code, angles, tol_bits=record["tol_bits"])


def _vertex_floats(poly: PolygonSolution) -> list:
    cx = sum(v.real for v in poly.vertices) / poly.n
    cy = sum(v.imag for v in poly.vertices) / poly.n
    return [(float(v.real - cx), float(v.imag - cy)) for v in poly.vertices]


def _csv_bytes(record: dict, poly: PolygonSolution) -> bytes:
    digits = decimal_digits_for(record["precision_bits"])
    lines = ["index,x,y"]
    for i, v in enumerate(poly.vertices):
        x = to_decimal(v.real, record["precision_bits"], digits)
        y = to_decimal(v.imag, record["precision_bits"], digits)
        lines.append(f"{i},{x},{y}")
    return ("\n".join(lines) + "\n").encode()


def _svg_bytes(record: dict, poly: PolygonSolution) -> bytes:
    pts = _vertex_floats(poly)
    graph = diameter_graph(poly)
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    pad = 0.08
    x0, y0 = min(xs) - pad, min(ys) - pad
    w = max(xs) - min(xs) + 2 * pad
    h = max(ys) - min(ys) + 2 * pad
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0:.4f} {-(y0 + h):.4f} '
        f'{w:.4f} {h:.4f}" width="400" height="400">'
    ]
    # gray diameter chords beneath the black boundary
    for k, l in graph.edges:
        (xa, ya), (xb, yb) = pts[k], pts[l]
        out.append(
            f'<line class="chord" x1="{xa:.6f}" y1="{-ya:.6f}" x2="{xb:.6f}" '
            f'y2="{-yb:.6f}" stroke="#999999" stroke-width="0.006"/>'
        )
    n = poly.n
    for i in range(n):
        (xa, ya), (xb, yb) = pts[i], pts[(i + 1) % n]
        out.append(
            f'<line class="edge" x1="{xa:.6f}" y1="{-ya:.6f}" x2="{xb:.6f}" '
            f'y2="{-yb:.6f}" stroke="#000000" stroke-width="0.012"/>'
        )
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode()


def _tikz_bytes(record: dict, poly: PolygonSolution) -> bytes:
    pts = _vertex_floats(poly)
    graph = diameter_graph(poly)
    out = ["\\begin{tikzpicture}[scale=4]"]
    for k, l in graph.edges:
        (xa, ya), (xb, yb) = pts[k], pts[l]
        out.append(
            f"  \\draw[semithick, gray] ({xa:.6f},{ya:.6f}) -- ({xb:.6f},{yb:.6f});"
        )
    cycle = " -- ".join(f"({x:.6f},{y:.6f})" for x, y in pts)
    out.append(f"  \\draw[very thick, black] {cycle} -- cycle;")
    out.append("\\end{tikzpicture}")
    return ("\n".join(out) + "\n").encode()


def export(record: dict, format: str) -> bytes:
    """Serialize a record; svg/tikz/csv re-verify the geometry first."""
    if format not in EXPORT_FORMATS:
        raise ValueError(f"format must be one of {EXPORT_FORMATS}, got {format!r}")
    if format == "json":
        return canonical_json(record)
    poly = polygon_from_record(record)  # raises UnverifiedRecordError / geometry errors
    if format == "csv":
        return _csv_bytes(record, poly)
    if format == "svg":
        return _svg_bytes(record, poly)
    return _tikz_bytes(record, poly)
