"""Certified two-sided bounds on the projective tensor norm.

The projective norm of a tensor is relaxed to a linear program over the
products of finite sphere coverings; the program's optimum V brackets the
norm in [V * gamma, V] with gamma a product of per-factor covering
constants.  Applied to the flattened coefficient tensor of a multipartite
density matrix this certifies entanglement: a state is separable exactly
when that norm is at most 1.
"""

from .covering import (
    Covering,
    GuaranteeMode,
    circle_covering,
    coefficient,
    covering_stats,
    embed,
    embed_sup,
    gamma1,
    get_covering,
    grid_covering,
    ring_covering,
)
from .certify import (
    ENTANGLED_MARGIN,
    NormEstimate,
    Verdict,
    WitnessBound,
    certify_state,
    estimate_pi_norm,
    extract_witness_bound,
    make_coverings,
)
from .errors import (
    BudgetExceeded,
    InvalidField,
    InvalidState,
    NumericalError,
    PinormError,
    ShapeMismatch,
    UnboundedProblem,
)
from .lp_model import (
    ConstraintRow,
    LpProblem,
    SeparationResult,
    build_complex,
    build_real,
    enumerate_rows,
    row_coefficients,
    rows_block,
    seed_selectors,
    separate_exact,
    separate_heuristic,
    variables_to_tensor,
)
from .lp_solver import LpSolution, SolverConfig, solve_dense, solve_dense_problem, solve_lazy
from .oracles import OracleReport, injective_norm_bruteforce, nuclear_norm, reference_bracket
from .tensor_core import (
    ComplexTensor,
    DensityMatrix,
    Field,
    RealTensor,
    RealifiedIndexMap,
    Shape,
    load_state,
    load_tensor,
    pairing,
    realify_array,
    realify_objective,
    realify_tensor,
    save_state,
    save_tensor,
    state_to_tensor,
)

__version__ = "0.1.0"
