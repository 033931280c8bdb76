"""Energy utilization and conversion metrics.

E_B is the loss-free basal energy, E_R the measured electrical energy and
E_MP the positive mechanical energy delivered by the joints.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ExperimentSet, JointTelemetry, RobotConstants, Run, TimeSeries, integrate
from .errors import MetricDomainError, PowerbenchWarning, ValidationError

# ratios above 1 by less than this are treated as round-off, not as a calibration problem
RATIO_WARN_TOL = 1e-9


@dataclass(frozen=True)
class EnergyResult:
    E_B: float
    E_R: float
    f_U: float
    E_MP: float | None = None
    f_C: float | None = None


@dataclass(frozen=True)
class EnergyAggregate:
    run_ids: tuple[str, ...]
    success: tuple[bool, ...]
    per_run: tuple[EnergyResult, ...]
    mean: EnergyResult
    n_succ: int


def basal_energy(constants: RobotConstants, T: float) -> float:
    if not T > 0:
        raise MetricDomainError(f"task duration must be > 0, got {T!r}")
    e_b = (constants.p_e + constants.p_mb) * T + constants.delta_e_p + constants.delta_e_k
    if e_b < 0:
        raise MetricDomainError(
            f"basal energy is negative ({e_b:g} J); check delta_E_P / delta_E_K"
        )
    if e_b == 0:
        warnings.warn("basal energy is 0 J (degenerate constants)", PowerbenchWarning, stacklevel=2)
    return e_b


def actual_energy(run: Run) -> float:
    e_r = integrate(run.power)
    if not e_r > 0:
        raise ValidationError(
            f"run {run.id!r}: integrated power is {e_r:g} J; power channel miswired?"
        )
    return e_r


def utilization_coefficient(E_B: float, E_R: float) -> float:
    if not (E_B > 0 and E_R > 0):
        raise MetricDomainError(f"f_U needs E_B > 0 and E_R > 0 (got {E_B!r}, {E_R!r})")
    f_u = E_B / E_R
    if f_u > 1 + RATIO_WARN_TOL:
        warnings.warn(
            f"f_U = {f_u:.6g} > 1: basal energy exceeds measured energy "
            "(sensor or calibration inconsistency)",
            PowerbenchWarning,
            stacklevel=2,
        )
    return f_u


def positive_mechanical_power(joint: JointTelemetry) -> TimeSeries:
    p = joint.torque.values * joint.velocity.values
    return joint.torque.with_values(np.maximum(p, 0.0))


def positive_mechanical_energy(joints: Sequence[JointTelemetry]) -> float:
    if not joints:
        raise ValidationError("positive mechanical energy needs at least one joint")
    return float(sum(integrate(positive_mechanical_power(j)) for j in joints))


def conversion_coefficient(E_MP: float, E_R: float) -> float:
    if not E_R > 0:
        raise MetricDomainError(f"f_C needs E_R > 0 (got {E_R!r})")
    if E_MP < 0:
        raise MetricDomainError(f"E_MP must be >= 0 (got {E_MP!r})")
    f_c = E_MP / E_R
    if f_c > 1 + RATIO_WARN_TOL:
        warnings.warn(
            f"f_C = {f_c:.6g} > 1: mechanical energy exceeds electrical energy",
            PowerbenchWarning,
            stacklevel=2,
        )
    return f_c


def run_energy(run: Run, constants: RobotConstants) -> EnergyResult:
    e_b = basal_energy(constants, run.duration)
    e_r = actual_energy(run)
    f_u = utilization_coefficient(e_b, e_r)
    if not run.has_telemetry:
        return EnergyResult(e_b, e_r, f_u)
    e_mp = positive_mechanical_energy(run.joints)
    return EnergyResult(e_b, e_r, f_u, e_mp, conversion_coefficient(e_mp, e_r))


def aggregate_energy(experiment: ExperimentSet) -> EnergyAggregate:
    """Per-run energy results and their mean over successful runs only."""
    if experiment.n_succ == 0:
        raise MetricDomainError(f"{experiment.label}: no successful runs")
    per_run = tuple(run_energy(r, experiment.constants) for r in experiment.runs)
    ok = [res for res, r in zip(per_run, experiment.runs) if r.success]

    def mean_of(name):
        vals = [getattr(res, name) for res in ok]
        if any(v is None for v in vals):
            return None
        return float(np.mean(vals))

    e_mp = mean_of("E_MP")
    if e_mp is None and any(res.E_MP is not None for res in ok):
        warnings.warn(
            f"{experiment.label}: telemetry missing for some successful runs; "
            "E_MP and f_C means omitted",
            PowerbenchWarning,
            stacklevel=2,
        )
    mean = EnergyResult(
        mean_of("E_B"), mean_of("E_R"), mean_of("f_U"), e_mp, mean_of("f_C") if e_mp is not None else None
    )
    return EnergyAggregate(
        run_ids=tuple(r.id for r in experiment.runs),
        success=tuple(r.success for r in experiment.runs),
        per_run=per_run,
        mean=mean,
        n_succ=experiment.n_succ,
    )
