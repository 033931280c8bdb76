"""Joint wear (stress) metric.

The raw input is the joint signal flux (JSF): the absolute discrepancy
between target and actual motor current. A functional form turns the JSF,
a friction weighting omega(velocity, temperature) and per-gear calibration
constants into a dimensionless stress series alpha_j(t). The program-level
score alpha_S takes the peak of every run/joint series, averages the peaks
over runs and sums the averages over joints.

Only one form ships by default (see `weighted_flux`); others can be added
with `register_alpha_form` and selected by name in the wear parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .core import ExperimentSet, JointTelemetry, TimeSeries
from .errors import ValidationError, WearUnavailableError

AlphaForm = Callable[[np.ndarray, np.ndarray, "JointWearParams"], np.ndarray]

ALPHA_FORMS: dict[str, AlphaForm] = {}

DEFAULT_FORM = "weighted-flux-v1"


def register_alpha_form(name: str):
    def deco(fn: AlphaForm) -> AlphaForm:
        if name in ALPHA_FORMS:
            raise ValueError(f"alpha form {name!r} already registered")
        ALPHA_FORMS[name] = fn
        return fn

    return deco


@dataclass(frozen=True)
class OmegaModel:
    """Affine friction weighting: offset + v_coeff*|velocity| + t_coeff*temperature."""

    offset: float = 1.0
    v_coeff: float = 0.0
    t_coeff: float = 0.0

    def __call__(self, velocity, temperature):
        return self.offset + self.v_coeff * np.abs(velocity) + self.t_coeff * np.asarray(temperature)


@dataclass(frozen=True)
class JointWearParams:
    phi: float
    tau_k: float
    tau_max: float
    omega: OmegaModel = field(default_factory=OmegaModel)

    def __post_init__(self):
        if not self.tau_max > 0:
            raise ValidationError(f"tau_max must be > 0, got {self.tau_max!r}")
        if not self.phi > 0:
            raise ValidationError(f"phi must be > 0, got {self.phi!r}")
        if not self.tau_k > 0:
            raise ValidationError(f"tau_k must be > 0, got {self.tau_k!r}")


@dataclass(frozen=True)
class WearParams:
    joints: Mapping[int, JointWearParams]
    form: str = DEFAULT_FORM

    def __post_init__(self):
        object.__setattr__(self, "joints", dict(self.joints))
        if self.form not in ALPHA_FORMS:
            raise ValidationError(
                f"unknown alpha form {self.form!r}; known: {sorted(ALPHA_FORMS)}"
            )

    def for_joint(self, index: int) -> JointWearParams:
        try:
            return self.joints[index]
        except KeyError:
            raise ValidationError(f"no wear parameters for joint {index}") from None


@dataclass(frozen=True, eq=False)
class WearResult:
    form: str
    run_ids: tuple[str, ...]
    joint_indices: tuple[int, ...]
    alpha: Mapping[tuple[str, int], TimeSeries]
    peaks: np.ndarray  # runs x joints
    per_joint: Mapping[int, float]
    per_run: tuple[float, ...]
    alpha_S: float


@register_alpha_form(DEFAULT_FORM)
def weighted_flux(jsf: np.ndarray, omega: np.ndarray, p: JointWearParams) -> np.ndarray:
    """alpha = JSF * omega * tau_k * phi / tau_max.

    JSF * tau_k is the torque error; phi maps it through the gear and
    tau_max normalizes by what the gear can endure.
    """
    return jsf * omega * (p.tau_k * p.phi / p.tau_max)


def joint_signal_flux(joint: JointTelemetry) -> TimeSeries:
    if not joint.has_currents:
        raise WearUnavailableError(
            f"joint {joint.joint_index}: target/actual currents missing; wear unavailable"
        )
    diff = np.abs(joint.current_target.values - joint.current_actual.values)
    return joint.current_target.with_values(diff)


def _on(series: TimeSeries, timestamps: np.ndarray) -> np.ndarray:
    if np.array_equal(series.timestamps, timestamps):
        return series.values
    # edge samples may sit up to one period outside; hold the end values
    g = np.clip(timestamps, series.start, series.end)
    return np.interp(g, series.timestamps, series.values)


def alpha_series(
    jsf: TimeSeries, joint: JointTelemetry, params: JointWearParams, form: str = DEFAULT_FORM
) -> TimeSeries:
    t = jsf.timestamps
    vel = _on(joint.velocity, t)
    temp = _on(joint.temperature, t) if joint.temperature is not None else np.zeros_like(t)
    omega = np.broadcast_to(params.omega(vel, temp), t.shape)
    if np.any(omega <= 0):
        raise ValidationError(
            f"joint {joint.joint_index}: friction weighting omega <= 0 within the telemetry envelope"
        )
    try:
        fn = ALPHA_FORMS[form]
    except KeyError:
        raise ValidationError(f"unknown alpha form {form!r}") from None
    values = np.asarray(fn(jsf.values, omega, params), dtype=np.float64)
    if np.any(values < 0):
        raise ValidationError(f"alpha form {form!r} produced negative values")
    return jsf.with_values(values)


def alpha_stress(experiment: ExperimentSet, params: WearParams | None = None) -> WearResult:
    params = params if params is not None else experiment.wear
    if params is None:
        raise WearUnavailableError(f"{experiment.label}: no wear parameters configured")
    missing = [r.id for r in experiment.runs if not r.has_currents]
    if missing:
        raise WearUnavailableError(
            f"{experiment.label}: current telemetry missing for runs {', '.join(missing)}"
        )
    joint_sets = {tuple(sorted(j.joint_index for j in r.joints)) for r in experiment.runs}
    if len(joint_sets) != 1:
        raise ValidationError(f"{experiment.label}: runs report different joint sets")
    joints = joint_sets.pop()

    alpha = {}
    peaks = np.zeros((experiment.n, len(joints)))
    for i, run in enumerate(experiment.runs):
        by_index = {j.joint_index: j for j in run.joints}
        for k, idx in enumerate(joints):
            joint = by_index[idx]
            a = alpha_series(joint_signal_flux(joint), joint, params.for_joint(idx), params.form)
            alpha[(run.id, idx)] = a
            peaks[i, k] = np.max(a.values)

    n = experiment.n
    per_joint = {idx: sum(peaks[:, k].tolist()) / n for k, idx in enumerate(joints)}
    alpha_S = sum(per_joint.values())
    return WearResult(
        form=params.form,
        run_ids=tuple(r.id for r in experiment.runs),
        joint_indices=joints,
        alpha=alpha,
        peaks=peaks,
        per_joint=per_joint,
        per_run=tuple(sum(row) for row in peaks.tolist()),
        alpha_S=float(alpha_S),
    )


def total_alpha(result: WearResult, run_id: str) -> TimeSeries:
    """Sum over joints of one run's alpha series, on the first joint's timestamps."""
    series = [result.alpha[(run_id, j)] for j in result.joint_indices]
    t = series[0].timestamps
    return TimeSeries(t, np.sum([_on(s, t) for s in series], axis=0))

