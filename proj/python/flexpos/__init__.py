"""Python bindings for the flexpos stage simulator."""

from ._flexpos import (
    AXES,
    ConfigError,
    DivergenceError,
    Error,
    IoError,
    FitError,
    hysteresis_width_percent,
    identified_plant,
    improvement_percent,
    natural_frequency_hz,
    rmse,
    run_comparison,
    run_experiment,
    run_sysid,
    settling_time_bound,
    workspace_extents,
)

__all__ = [
    "AXES",
    "ConfigError",
    "DivergenceError",
    "Error",
    "IoError",
    "FitError",
    "hysteresis_width_percent",
    "identified_plant",
    "improvement_percent",
    "natural_frequency_hz",
    "rmse",
    "run_comparison",
    "run_experiment",
    "run_sysid",
    "settling_time_bound",
    "workspace_extents",
]
