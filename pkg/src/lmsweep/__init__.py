"""Adaptive frequency sweeps built on reduced Loewner-matrix state-space models."""
from .core import (
    LMSweepError,
    SampleSet,
    relative_matrix_error,
    spectral_norm,
)
from .loewner import (
    ReducedModel,
    StateModel,
    build_mfti,
    build_vfti,
    fit,
    partition_even_odd,
    partition_positive_negative,
    reduce,
)
from .sweep import SweepConfig, SweepResult, TestGrid, initial_count, log_grid, run_sweep
from .baselines import pradovera_sweep, sb_sweep

__version__ = "0.1.0"
