"""Maximum correntropy unscented filter: Python bindings over the C++ core."""

from ._core import (
    ConfigError,
    DimensionMismatch,
    Error,
    InvalidArgument,
    IoError,
    NotPositiveDefinite,
    gaussian_kernel,
    mcuf_update,
    parse_filters,
    run_experiment,
    sample_correntropy,
    sigma_points,
)

__all__ = [
    "ConfigError",
    "DimensionMismatch",
    "Error",
    "InvalidArgument",
    "IoError",
    "NotPositiveDefinite",
    "gaussian_kernel",
    "mcuf_update",
    "parse_filters",
    "run_experiment",
    "sample_correntropy",
    "sigma_points",
]
