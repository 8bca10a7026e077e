from .decay import DECAY_MODES, DecayCurve, decay_curve
from .elements import (
    admissible,
    canonical_indices,
    free_element_closed,
    free_element_jacobi,
    free_elements_closed_float,
    free_elements_jacobi,
    heat_element,
    heat_elements,
)
from .table import (
    CLOSED_FORM_CROSSOVER,
    MAX_CUTOFF,
    PropagatorTable,
    ResourceLimitError,
    apply_free,
    apply_free_array,
    build_blocks,
    cached_blocks,
    free_elements,
    load_table,
    populated_offsets,
    save_table,
)

__all__ = [
    "DECAY_MODES",
    "DecayCurve",
    "decay_curve",
    "admissible",
    "canonical_indices",
    "free_element_closed",
    "free_element_jacobi",
    "free_elements_closed_float",
    "free_elements_jacobi",
    "heat_element",
    "heat_elements",
    "CLOSED_FORM_CROSSOVER",
    "MAX_CUTOFF",
    "PropagatorTable",
    "ResourceLimitError",
    "apply_free",
    "apply_free_array",
    "cached_blocks",
    "build_blocks",
    "free_elements",
    "load_table",
    "populated_offsets",
    "save_table",
]
