from .waves import (
    DIRECTIONS,
    ContractionFailure,
    GateError,
    ScatteringConfig,
    WaveResult,
    default_norm_grid,
    diagonal_wave,
    picard_wave,
    scattering_map,
    scattering_norm,
)
from .probe import SurjectivityReport, non_surjectivity_probe, soliton_overlap
