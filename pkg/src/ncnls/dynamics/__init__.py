from .flow import (
    DEFAULT_LEAK_TOL,
    LeakError,
    LeakWarning,
    Trajectory,
    check_initial_support,
    evolve,
    leak_fraction,
    nonlinear_flow,
    strang_step,
)
from .residual import ConservationReport, conservation_report, duhamel_residual, truncation_defect
from .soliton import (
    InadmissibleInteraction,
    NewtonStagnation,
    SolitonResult,
    admissible_minimum,
    diagonal_generator,
    soliton_find,
    soliton_seed,
    theta_threshold,
)
from .export import read_trajectory_index, write_trajectory
