"""Power-consumption driven performance metrics for robot programs."""

from .core import (
    ExperimentSet,
    JointTelemetry,
    RobotConstants,
    Run,
    TimeSeries,
    integrate,
    resample,
    signal_range,
)
from .energy import (
    EnergyResult,
    actual_energy,
    aggregate_energy,
    basal_energy,
    conversion_coefficient,
    positive_mechanical_energy,
    positive_mechanical_power,
    utilization_coefficient,
)
from .errors import (
    MetricDomainError,
    OutputError,
    ParseError,
    PowerbenchError,
    PowerbenchWarning,
    ValidationError,
    WearUnavailableError,
)
from .ingest import load_experiment, load_power_csv, load_telemetry_csv, write_experiment
from .reliability import (
    ReliabilityWeights,
    common_grid,
    correlation_coefficient,
    evaluate_reliability,
    mean_successful_profile,
    nrmse_coefficient,
    reliability_coefficient,
    variation_coefficient,
)
from .stats import confidence_band, heatmap_matrix, paired_t_test
from .wear import JointWearParams, OmegaModel, WearParams, alpha_series, alpha_stress, joint_signal_flux

__version__ = "0.1.0"

__all__ = [
    "actual_energy",
    "aggregate_energy",
    "alpha_series",
    "alpha_stress",
    "basal_energy",
    "common_grid",
    "confidence_band",
    "conversion_coefficient",
    "correlation_coefficient",
    "EnergyResult",
    "evaluate_reliability",
    "ExperimentSet",
    "heatmap_matrix",
    "integrate",
    "joint_signal_flux",
    "JointTelemetry",
    "JointWearParams",
    "load_experiment",
    "load_power_csv",
    "load_telemetry_csv",
    "mean_successful_profile",
    "MetricDomainError",
    "nrmse_coefficient",
    "OmegaModel",
    "OutputError",
    "paired_t_test",
    "ParseError",
    "positive_mechanical_energy",
    "positive_mechanical_power",
    "PowerbenchError",
    "PowerbenchWarning",
    "reliability_coefficient",
    "ReliabilityWeights",
    "resample",
    "RobotConstants",
    "Run",
    "signal_range",
    "TimeSeries",
    "utilization_coefficient",
    "ValidationError",
    "variation_coefficient",
    "WearParams",
    "WearUnavailableError",
    "write_experiment",
]
