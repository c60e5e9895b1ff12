"""Inequality measures for complex survey samples with Taylor bias correction."""

from ._core import (
    CalibrationError,
    DegenerateError,
    DesignError,
    DomainError,
    Error,
    EstimationFailure,
    InputError,
    InsufficientSampleError,
    RankConsistencyError,
    RunQualityError,
    Sample,
    __version__,
    bias_correct,
    bootstrap,
    calibrate,
    detect_outliers,
    estimate,
    midzuno_inclusion_probabilities,
    pareto_tail_index,
    population_value,
    simulate,
    treat_tails,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
