"""maxperim: convex small polygons of maximum perimeter.

Combinatorial code enumeration, an exact subset-sum Phase I over roots of
unity, an arbitrary-precision Lagrange-Newton Phase II, and geometric plus
algebraic verification of every result.
"""

from .codes import (
    Code,
    Composition,
    QuarterCode,
    canonicalize,
    code_to_composition,
    composition_to_code,
    count_codes,
    enumerate_codes,
    equivalent,
    expand_quarter,
    odd_divisor_code,
)
from .geometry import (
    DiameterGraph,
    PolygonSolution,
    diameter_graph,
    reconstruct,
    upper_bound,
    zonogon_check,
)
from .phase1 import (
    FixedPoint128,
    SspInstance,
    SspResult,
    build_ssp,
    merge_results,
    minimize_residual_general,
    parallel_split,
    residual,
    solve_ssp,
    solve_ssp_topk,
)
from .phase2 import (
    AngleVector,
    KktState,
    NewtonReport,
    VARIANTS,
    init_regular,
    jacobian_rank_certificate,
    kkt_gradient,
    kkt_matrix,
    newton_solve,
)
from .pipeline import (
    N128_RECORD_QUARTER,
    RankedSolutions,
    best_codes,
    closed_form_check,
    enumerate_and_solve,
    solve_two_phase,
    verify_polynomial_root,
)
from .polynomials import POLYNOMIALS, IntegerPolynomial

__version__ = "0.1.0"
