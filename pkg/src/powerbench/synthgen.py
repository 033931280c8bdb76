"""Synthetic experiment sets with exact ground truth.

Every generated signal is piecewise linear with all knots on the sample
grid, so the closed-form integrals reported as ground truth agree with the
trapezoidal integrals of the noiseless samples up to rounding. Gaussian
noise is added to the power channel only, after the ground truth is taken.

Motion bumps are symmetric trapezoids (ramps of a quarter width each).
Failure modes:

* ``spike``      rectangle of ``amplitude_w`` for ``width_s`` starting at
                 ``at_s`` (collision / protective stop), with a matching
                 burst of current discrepancy;
* ``dropout``    motion bumps removed (failed pick), all or ``bumps``;
* ``truncation`` the run ends at ``at_s``.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .core import ExperimentSet, JointTelemetry, RobotConstants, Run, TimeSeries
from .errors import OutputError, ParseError, ValidationError
from .wear import JointWearParams, WearParams

FAILURE_MODES = ("spike", "dropout", "truncation")


@dataclass(frozen=True)
class Bump:
    start: float
    width: float
    peak_w: float


@dataclass(frozen=True)
class Failure:
    run_index: int
    mode: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScenarioSpec:
    n_runs: int = 10
    duration: float = 40.0
    dt: float = 0.02
    baseline_w: float = 98.26
    motion_bumps: tuple[Bump, ...] = ()
    noise_std_w: float = 0.0
    failures: tuple[Failure, ...] = ()
    seed: int = 0
    program_id: str = "synthetic"
    condition_id: str = "default"
    p_e_w: float = 91.14
    p_mb_w: float = 7.12
    n_joints: int = 6
    with_telemetry: bool = True
    mech_fraction: float = 0.1
    holding_torque_nm: float = 20.0
    jsf_gain_a_per_rad_s: float = 0.4
    spike_jsf_a: float = 2.0
    temperature_c: float = 30.0

    def __post_init__(self):
        object.__setattr__(self, "motion_bumps", tuple(self.motion_bumps))
        object.__setattr__(self, "failures", tuple(self.failures))
        if self.n_runs < 1:
            raise ValidationError("n_runs must be >= 1")
        if not self.dt > 0:
            raise ValidationError("dt must be > 0")
        if not self.duration >= 2 * self.dt:
            raise ValidationError("duration must cover at least 2 samples")
        if self.noise_std_w < 0:
            raise ValidationError("noise_std_w must be >= 0")
        if self.n_joints < 1:
            raise ValidationError("n_joints must be >= 1")
        for k, b in enumerate(self.motion_bumps):
            if b.start < 0 or b.start + b.width > self.duration + 1e-9 or b.width <= 0:
                raise ValidationError(f"motion_bumps[{k}] lies outside [0, {self.duration:g}] s")
        for k, f in enumerate(self.failures):
            if f.mode not in FAILURE_MODES:
                raise ValidationError(f"failures[{k}].mode must be one of {FAILURE_MODES}, got {f.mode!r}")
            if not 0 <= f.run_index < self.n_runs:
                raise ValidationError(f"failures[{k}].run_index {f.run_index} outside 0..{self.n_runs - 1}")
            if f.mode in ("spike", "truncation"):
                if "at_s" not in f.params:
                    raise ValidationError(f"failures[{k}]: {f.mode} needs params.at_s")
                at = f.params["at_s"]
                end = at + (f.params.get("width_s", 1.0) if f.mode == "spike" else 0.0)
                if at <= 0 or end >= self.duration:
                    raise ValidationError(
                        f"failures[{k}]: {f.mode} at {at!r} s extends beyond the {self.duration:g} s run"
                    )

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> ScenarioSpec:
        if not isinstance(doc, dict):
            raise ParseError("scenario spec must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        for key in doc:
            if key not in names:
                raise ParseError(f"unknown scenario field {key!r}")
        kw = dict(doc)
        try:
            kw["motion_bumps"] = tuple(
                Bump(**_only(b, ("start", "width", "peak_w"), f"motion_bumps[{k}]"))
                for k, b in enumerate(doc.get("motion_bumps", ()))
            )
            kw["failures"] = tuple(
                Failure(**_only(f, ("run_index", "mode", "params"), f"failures[{k}]"))
                for k, f in enumerate(doc.get("failures", ()))
            )
        except TypeError as exc:
            raise ParseError(f"invalid scenario entry: {exc}") from None
        for f in dataclasses.fields(cls):
            if f.name not in kw:
                continue
            v = kw[f.name]
            expected = {"int": (int,), "float": (int, float), "str": (str,), "bool": (bool,)}.get(f.type)
            if expected and (isinstance(v, bool) != (f.type == "bool") or not isinstance(v, expected)):
                raise ParseError(f"scenario field {f.name!r} must be of type {f.type}, got {v!r}")
        return cls(**kw)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def _only(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    for key in obj:
        if key not in allowed:
            raise ParseError(f"unknown scenario field {where}.{key}")
    return obj


@dataclass(frozen=True)
class RunTruth:
    id: str
    success: bool
    duration: float
    E_R: float
    E_MP: float | None


@dataclass(frozen=True)
class GroundTruth:
    runs: tuple[RunTruth, ...]

    def to_dict(self) -> dict:
        return {"runs": [dataclasses.asdict(r) for r in self.runs]}

    def by_id(self) -> dict[str, RunTruth]:
        return {r.id: r for r in self.runs}


# piecewise-linear helpers in sample-index space -------------------------------


def _pl_eval(k: np.ndarray, knots: Sequence[int], vals: Sequence[float]) -> np.ndarray:
    return np.interp(k, knots, vals, left=0.0, right=0.0)


def _pl_area(knots: Sequence[int], vals: Sequence[float], upto: int, dt: float) -> float:
    """Exact integral over [0, upto*dt] of the polygon through (knot*dt, val)."""
    area = 0.0
    for (k0, v0), (k1, v1) in zip(zip(knots, vals), zip(knots[1:], vals[1:])):
        if k0 >= upto:
            break
        if k1 <= 0:
            continue
        if k0 < 0:
            v0 = v0 + (v1 - v0) * (0 - k0) / (k1 - k0)
            k0 = 0
        if k1 > upto:
            v1 = v0 + (v1 - v0) * (upto - k0) / (k1 - k0)
            k1 = upto
        area += 0.5 * (v0 + v1) * (k1 - k0) * dt
    return area


def _bump_knots(b: Bump, dt: float) -> tuple[list[int], list[float]]:
    a = round(b.start / dt)
    d = round((b.start + b.width) / dt)
    ramp = max(1, round(b.width / 4 / dt))
    if d - a < 2 * ramp:
        raise ValidationError(f"bump at {b.start:g} s is narrower than two samples")
    return [a, a + ramp, d - ramp, d], [0.0, b.peak_w, b.peak_w, 0.0]


def _rect_knots(start_s: float, width_s: float, amp: float, dt: float):
    a = round(start_s / dt)
    w = max(1, round(width_s / dt))
    # samples a .. a+w-1 are high; linear ramps of one sample on each side
    return [a - 1, a, a + w - 1, a + w], [0.0, amp, amp, 0.0]


def default_wear_params(n_joints: int) -> WearParams:
    big = JointWearParams(phi=101.0, tau_k=0.125, tau_max=150.0)
    small = JointWearParams(phi=101.0, tau_k=0.0922, tau_max=28.0)
    return WearParams({j: big if j < 3 else small for j in range(n_joints)})


def generate(spec: ScenarioSpec) -> tuple[ExperimentSet, GroundTruth]:
    dt = spec.dt
    n_total = round(spec.duration / dt)
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(spec.seed).spawn(spec.n_runs)]
    bump_knots = [_bump_knots(b, dt) for b in spec.motion_bumps]

    n_pos = math.ceil(spec.n_joints / 2)
    torque = [spec.holding_torque_nm if j % 2 == 0 else -spec.holding_torque_nm for j in range(spec.n_joints)]
    # velocity = gain * motion power; positive joints convert mech_fraction of it
    v_gain = spec.mech_fraction / (n_pos * spec.holding_torque_nm) if spec.holding_torque_nm else 0.0
    wear = default_wear_params(spec.n_joints)

    runs, truths = [], []
    for i in range(spec.n_runs):
        fails = [f for f in spec.failures if f.run_index == i]
        end = n_total
        active = list(range(len(bump_knots)))
        spikes = []
        for f in fails:
            if f.mode == "truncation":
                end = min(end, round(f.params["at_s"] / dt))
            elif f.mode == "dropout":
                drop = set(f.params.get("bumps", active))
                active = [b for b in active if b not in drop]
            else:
                spikes.append(
                    _rect_knots(f.params["at_s"], f.params.get("width_s", 1.0), f.params.get("amplitude_w", 300.0), dt)
                )
        if end < 2:
            raise ValidationError(f"run {i}: truncation leaves fewer than 2 samples")
        k = np.arange(end + 1, dtype=np.float64)
        t = k * dt

        motion = np.zeros_like(k)
        motion_area = 0.0
        for b in active:
            kn, vals = bump_knots[b]
            motion += _pl_eval(k, kn, vals)
            motion_area += _pl_area(kn, vals, end, dt)
        spike = np.zeros_like(k)
        spike_area = 0.0
        spike_mask = np.zeros_like(k)
        for kn, vals in spikes:
            spike += _pl_eval(k, kn, vals)
            spike_area += _pl_area(kn, vals, end, dt)
            spike_mask += _pl_eval(k, kn, [0.0, 1.0, 1.0, 0.0])

        clean = spec.baseline_w + motion + spike
        e_r = spec.baseline_w * end * dt + motion_area + spike_area
        power = clean + rngs[i].normal(0.0, spec.noise_std_w, size=k.size) if spec.noise_std_w else clean

        joints = None
        e_mp = None
        if spec.with_telemetry:
            joints = []
            for j in range(spec.n_joints):
                vel = v_gain * motion
                i_target = np.full_like(k, torque[j] / wear.joints[j].tau_k)
                jsf = spec.jsf_gain_a_per_rad_s * np.abs(vel) + spec.spike_jsf_a * spike_mask
                joints.append(
                    JointTelemetry(
                        j,
                        TimeSeries(t, np.full_like(k, torque[j])),
                        TimeSeries(t, vel),
                        TimeSeries(t, i_target),
                        TimeSeries(t, i_target - jsf),
                        TimeSeries(t, np.full_like(k, spec.temperature_c)),
                    )
                )
            e_mp = sum(torque[j] * v_gain * motion_area for j in range(spec.n_joints) if torque[j] * v_gain > 0)
            e_mp = float(e_mp)

        run_id = f"run{i + 1:02d}"
        success = not fails
        runs.append(Run(run_id, TimeSeries(t, power), success, joints, {"seed": str(spec.seed)}))
        truths.append(RunTruth(run_id, success, float(t[-1]), float(e_r), e_mp))

    constants = RobotConstants(spec.p_e_w, spec.p_mb_w, spec.n_joints)
    experiment = ExperimentSet(spec.program_id, spec.condition_id, tuple(runs), constants, wear)
    return experiment, GroundTruth(tuple(truths))


def machine_tending_spec(
    idle_s: float = 10.0,
    n_runs: int = 10,
    noise_std_w: float = 1.0,
    faulty_runs: Sequence[int] = (),
    seed: int = 0,
    program_id: str = "nominal",
    dt: float = 0.02,
    baseline_w: float = 98.26,
    motion_scale: float = 1.0,
) -> ScenarioSpec:
    """Load / idle / unload profile; faulty runs get a collision spike and an early stop.

    The collision lands during the load phase and the protective stop ends
    the run one second after the collision burst.
    """
    load = [(1.0, 2.0, 120.0), (3.5, 1.5, 80.0), (5.5, 2.5, 140.0), (8.5, 1.5, 80.0)]
    t_unload = 10.0 + idle_s
    unload = [(t_unload, 1.5, 80.0), (t_unload + 2.0, 2.5, 140.0), (t_unload + 5.0, 2.0, 120.0), (t_unload + 7.5, 1.5, 80.0)]
    duration = t_unload + 10.0
    bumps = tuple(Bump(s, w, p * motion_scale) for s, w, p in load + unload)
    failures = []
    for r in faulty_runs:
        at = 5.0 + 0.5 * (r % 3)
        failures.append(Failure(r, "spike", {"at_s": at, "width_s": 1.5, "amplitude_w": 500.0}))
        failures.append(Failure(r, "truncation", {"at_s": at + 2.5}))
    return ScenarioSpec(
        n_runs=n_runs,
        duration=duration,
        dt=dt,
        baseline_w=baseline_w,
        motion_bumps=bumps,
        noise_std_w=noise_std_w,
        failures=tuple(failures),
        seed=seed,
        program_id=program_id,
        condition_id=f"idle{idle_s:g}s",
    )


def write_synthetic(spec: ScenarioSpec, out_dir) -> Path:
    """Generate, then write recordings, manifest and ``ground_truth.json``."""
    from .ingest import write_experiment

    experiment, truth = generate(spec)
    out = Path(out_dir)
    manifest = write_experiment(experiment, out)
    try:
        (out / "ground_truth.json").write_text(json.dumps(truth.to_dict(), indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"{out}: cannot write ground truth ({exc.strerror or exc})") from None
    return manifest


def load_spec(path) -> ScenarioSpec:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise OutputError(f"{path}: cannot read ({exc.strerror or exc})") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    return ScenarioSpec.from_dict(doc)
