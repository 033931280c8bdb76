"""Shared data model and elementary time-series operations.

All containers are frozen; the numpy arrays they hold are marked read-only
so a TimeSeries can be shared between runs, threads and reports safely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from .errors import MetricDomainError, ValidationError

if TYPE_CHECKING:
    from .wear import WearParams


def _frozen_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Scalar signal sampled at strictly increasing timestamps (seconds)."""

    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = _frozen_array(self.timestamps, "timestamps")
        v = _frozen_array(self.values, "values")
        if t.shape != v.shape:
            raise ValidationError(
                f"timestamps and values differ in length ({t.size} vs {v.size})"
            )
        if t.size < 2:
            raise ValidationError("a TimeSeries needs at least 2 samples")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValidationError("TimeSeries contains non-finite entries")
        bad = np.flatnonzero(np.diff(t) <= 0)
        if bad.size:
            i = int(bad[0]) + 1
            raise ValidationError(
                f"timestamps not strictly increasing at sample {i} "
                f"({t[i - 1]!r} -> {t[i]!r})"
            )
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.timestamps.size

    @property
    def start(self) -> float:
        return float(self.timestamps[0])

    @property
    def end(self) -> float:
        return float(self.timestamps[-1])

    @property
    def duration(self) -> float:
        return self.end - self.start

    @property
    def median_dt(self) -> float:
        return float(np.median(np.diff(self.timestamps)))

    @property
    def max_dt(self) -> float:
        return float(np.max(np.diff(self.timestamps)))

    def rebased(self) -> TimeSeries:
        """Shift timestamps so the first sample sits at t = 0."""
        if self.timestamps[0] == 0.0:
            return self
        return TimeSeries(self.timestamps - self.timestamps[0], self.values)

    def scaled(self, k: float) -> TimeSeries:
        return TimeSeries(self.timestamps, self.values * k)

    def between(self, t0: float, t1: float) -> TimeSeries:
        """Samples with t0 <= t <= t1 (no interpolation at the edges)."""
        mask = (self.timestamps >= t0) & (self.timestamps <= t1)
        return TimeSeries(self.timestamps[mask], self.values[mask])

    def with_values(self, values) -> TimeSeries:
        return TimeSeries(self.timestamps, values)


def resample(series: TimeSeries, grid) -> TimeSeries:
    """Linearly interpolate `series` onto `grid`.

    Raises MetricDomainError if any grid point lies outside the series span.
    """
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 1 or g.size < 1:
        raise ValidationError("grid must be a non-empty 1-D sequence")
    if g.size > 1 and np.any(np.diff(g) <= 0):
        raise ValidationError("grid must be strictly increasing")
    if g[0] < series.timestamps[0] or g[-1] > series.timestamps[-1]:
        raise MetricDomainError(
            f"grid [{g[0]!r}, {g[-1]!r}] exceeds series domain "
            f"[{series.start!r}, {series.end!r}]"
        )
    if g.size == series.timestamps.size and np.array_equal(g, series.timestamps):
        return series
    return TimeSeries(g, np.interp(g, series.timestamps, series.values))


def integrate(series: TimeSeries) -> float:
    """Trapezoidal integral over the full domain (value-units x seconds)."""
    return float(np.trapezoid(series.values, series.timestamps))


def signal_range(series: TimeSeries) -> float:
    return float(np.max(series.values) - np.min(series.values))


@dataclass(frozen=True, eq=False)
class JointTelemetry:
    joint_index: int
    torque: TimeSeries
    velocity: TimeSeries
    current_target: TimeSeries | None = None
    current_actual: TimeSeries | None = None
    temperature: TimeSeries | None = None

    def __post_init__(self):
        if self.joint_index < 0:
            raise ValidationError(f"joint index must be >= 0, got {self.joint_index}")
        if not np.array_equal(self.torque.timestamps, self.velocity.timestamps):
            raise ValidationError(
                f"joint {self.joint_index}: torque and velocity timestamps differ"
            )
        if (self.current_target is None) != (self.current_actual is None):
            raise ValidationError(
                f"joint {self.joint_index}: target and actual currents must be given together"
            )
        if self.current_target is not None and not np.array_equal(
            self.current_target.timestamps, self.current_actual.timestamps
        ):
            raise ValidationError(
                f"joint {self.joint_index}: target and actual current timestamps differ"
            )

    @property
    def has_currents(self) -> bool:
        return self.current_target is not None

    def series(self) -> list[TimeSeries]:
        out = [self.torque, self.velocity]
        for s in (self.current_target, self.current_actual, self.temperature):
            if s is not None:
                out.append(s)
        return out

    def scaled_power(self, k: float) -> JointTelemetry:
        """Telemetry whose mechanical power is scaled by k (torque scaled, velocity kept)."""
        return JointTelemetry(
            self.joint_index,
            self.torque.scaled(k),
            self.velocity,
            self.current_target,
            self.current_actual,
            self.temperature,
        )


@dataclass(frozen=True, eq=False)
class Run:
    """One execution of a program."""

    id: str
    power: TimeSeries
    success: bool = True
    joints: tuple[JointTelemetry, ...] | None = None
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.joints is not None:
            object.__setattr__(self, "joints", tuple(self.joints))
        object.__setattr__(self, "metadata", dict(self.metadata))
        if not self.power.duration > 0:
            raise ValidationError(f"run {self.id!r}: duration must be > 0")
        for joint in self.joints or ():
            for s in joint.series():
                tol = max(self.power.max_dt, s.max_dt)
                if abs(s.start - self.power.start) > tol or abs(s.end - self.power.end) > tol:
                    raise ValidationError(
                        f"run {self.id!r}: joint {joint.joint_index} spans "
                        f"[{s.start:g}, {s.end:g}] s but power spans "
                        f"[{self.power.start:g}, {self.power.end:g}] s"
                    )

    @property
    def duration(self) -> float:
        return self.power.duration

    @property
    def has_telemetry(self) -> bool:
        return bool(self.joints)

    @property
    def has_currents(self) -> bool:
        return bool(self.joints) and all(j.has_currents for j in self.joints)


@dataclass(frozen=True)
class RobotConstants:
    """Electronics and brake power plus user-supplied mechanical energy changes."""

    p_e: float
    p_mb: float
    n_j: int = 6
    delta_e_p: float = 0.0
    delta_e_k: float = 0.0

    def __post_init__(self):
        if self.p_e < 0 or self.p_mb < 0:
            raise ValidationError("P_E and P_MB must be non-negative")
        if self.n_j < 1:
            raise ValidationError("n_J must be >= 1")


@dataclass(frozen=True, eq=False)
class ExperimentSet:
    """n runs of one program under one condition."""

    program_id: str
    condition_id: str
    runs: tuple[Run, ...]
    constants: RobotConstants
    wear: WearParams | None = None

    def __post_init__(self):
        object.__setattr__(self, "runs", tuple(self.runs))
        if not self.runs:
            raise ValidationError("an experiment set needs at least one run")

    @property
    def n(self) -> int:
        return len(self.runs)

    @property
    def n_succ(self) -> int:
        return sum(1 for r in self.runs if r.success)

    @property
    def successful_runs(self) -> tuple[Run, ...]:
        return tuple(r for r in self.runs if r.success)

    @property
    def label(self) -> str:
        return f"{self.program_id}@{self.condition_id}"

    def with_runs(self, runs: Sequence[Run]) -> ExperimentSet:
        return ExperimentSet(self.program_id, self.condition_id, tuple(runs), self.constants, self.wear)
