"""Truncated Fock-basis operators, weighted norms and the norm-inequality oracles."""
from .basis import WeightMatrix, b_weight, flat_index, multi_indices, weight_matrix
from .inequalities import NormInequalityReport, c_const, lattice_weight_sum, verify_norm_inequalities
from .norms import NormConvergenceError, hs_norm, norm_a, norm_p_alpha, op_norm, trace_norm
from .operators import (
    DiagonalOperator,
    FockOperator,
    InteractionPolynomial,
    algebra,
    apply_polynomial,
    random_operator,
    support_radius,
)
from .snapshot import format_snapshot, parse_snapshot, read_snapshot, write_snapshot
