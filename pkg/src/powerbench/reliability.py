"""Power-consistency reliability coefficients.

Every run is compared against the mean profile of the *successful* runs:

* c1: one minus the range-normalized RMS deviation from that mean,
* c2: one minus the time-averaged cross-run coefficient of variation,
* c3: Pearson correlation with the mean profile,

and f_R is their weighted average (|c3| enters the average).

Runs are compared on a shared uniform grid truncated to the shortest run.
Cross-run means and deviations are computed on data shifted by the first
successful run so that byte-identical runs give exactly zero residuals.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ExperimentSet, TimeSeries, resample, signal_range
from .errors import MetricDomainError, PowerbenchWarning, ValidationError

DEFAULT_CV_FLOOR = 1e-6


@dataclass(frozen=True)
class ReliabilityWeights:
    w1: float = 1.0
    w2: float = 1.0
    w3: float = 1.0

    def __post_init__(self):
        ws = (self.w1, self.w2, self.w3)
        if any(not math.isfinite(w) or w < 0 for w in ws):
            raise ValidationError(f"reliability weights must be finite and >= 0, got {ws}")
        if sum(ws) <= 0:
            raise ValidationError("reliability weights must not all be zero")

    @classmethod
    def parse(cls, text: str) -> ReliabilityWeights:
        parts = text.split(",")
        if len(parts) != 3:
            raise ValidationError(f"expected three comma-separated weights, got {text!r}")
        try:
            return cls(*(float(p) for p in parts))
        except ValueError as exc:
            raise ValidationError(f"invalid weights {text!r}: {exc}") from None


@dataclass(frozen=True, eq=False)
class ReliabilityResult:
    run_ids: tuple[str, ...]
    success: tuple[bool, ...]
    grid: np.ndarray
    mean_profile: TimeSeries
    c1: tuple[float, ...]
    c3: tuple[float, ...]
    c1_mean: float
    c2: float
    c3_mean: float
    f_R: float
    weights: ReliabilityWeights
    include_failed_in_c13: bool
    dropped_s: tuple[float, ...]


def common_grid(experiment: ExperimentSet, dt: float | None = None) -> np.ndarray:
    """Uniform grid over the span shared by all runs.

    The step defaults to the median of the runs' median sample intervals.
    """
    powers = [r.power for r in experiment.runs]
    step = float(np.median([p.median_dt for p in powers])) if dt is None else float(dt)
    if not step > 0:
        raise ValidationError(f"grid step must be > 0, got {step!r}")
    start = max(p.start for p in powers)
    end = min(p.end for p in powers)
    k = math.floor((end - start) / step + 1e-9)
    if k < 2:
        raise MetricDomainError(
            f"shortest run spans {end - start:g} s, fewer than 2 grid steps of {step:g} s"
        )
    grid = start + step * np.arange(k + 1)
    # float rounding of k*step may overshoot the shortest run by an ulp
    grid[-1] = min(grid[-1], end)
    return grid


def resample_runs(experiment: ExperimentSet, grid) -> np.ndarray:
    """Matrix of run power profiles on `grid`, one row per run in set order."""
    return np.vstack([resample(r.power, grid).values for r in experiment.runs])


def _shifted_mean(rows: np.ndarray) -> np.ndarray:
    ref = rows[0]
    return ref + np.mean(rows - ref, axis=0)


def mean_successful_profile(experiment: ExperimentSet, grid) -> TimeSeries:
    if experiment.n_succ == 0:
        raise MetricDomainError(f"{experiment.label}: no successful runs")
    rows = np.vstack([resample(r.power, grid).values for r in experiment.successful_runs])
    return TimeSeries(np.asarray(grid, dtype=np.float64), _shifted_mean(rows))


def _check_same_grid(a: TimeSeries, b: TimeSeries):
    if not np.array_equal(a.timestamps, b.timestamps):
        raise ValidationError("run and mean profile must share an identical grid")


def nrmse_coefficient(run_resampled: TimeSeries, mean_profile: TimeSeries) -> float:
    """c1 = 1 - RMS(run - mean) / range(run), clamped at 0."""
    _check_same_grid(run_resampled, mean_profile)
    r = signal_range(run_resampled)
    if r == 0:
        raise MetricDomainError("constant profile: NRMSE undefined")
    t = run_resampled.timestamps
    resid = run_resampled.values - mean_profile.values
    msq = np.trapezoid(resid * resid, t) / (t[-1] - t[0])
    eps = math.sqrt(msq) / r
    if eps > 1:
        warnings.warn(f"NRMSE {eps:.4g} > 1; c1 clamped to 0", PowerbenchWarning, stacklevel=2)
        return 0.0
    return 1.0 - eps


def variation_coefficient(
    profiles: Sequence[TimeSeries],
    mean_profile: TimeSeries,
    cv_floor: float = DEFAULT_CV_FLOOR,
) -> float:
    """c2 = 1 - time average of sigma(t) / mean(t), clamped to [0, 1].

    sigma(t) is the sample standard deviation across *all* profiles; the
    denominator is the successful-run mean. Samples where |mean| < cv_floor
    are dropped, and the average is taken over segments whose two end
    samples both survive.
    """
    if len(profiles) < 2:
        raise MetricDomainError("coefficient of variation needs at least 2 runs")
    for p in profiles:
        _check_same_grid(p, mean_profile)
    rows = np.vstack([p.values for p in profiles])
    sigma = np.std(rows - rows[0], axis=0, ddof=1)
    mean = mean_profile.values
    t = mean_profile.timestamps
    keep = np.abs(mean) >= cv_floor
    n_drop = int(np.count_nonzero(~keep))
    if n_drop:
        warnings.warn(
            f"{n_drop} grid samples with |mean power| < {cv_floor:g} W excluded from cv",
            PowerbenchWarning,
            stacklevel=2,
        )
    cv = np.zeros_like(mean)
    cv[keep] = sigma[keep] / mean[keep]
    seg = keep[:-1] & keep[1:]
    if not seg.any():
        raise MetricDomainError("no grid segment with mean power above the cv floor")
    dt = np.diff(t)
    area = np.sum(0.5 * (cv[:-1] + cv[1:]) * dt * seg)
    c2 = 1.0 - area / np.sum(dt * seg)
    if c2 < 0 or c2 > 1:
        warnings.warn(f"c2 = {c2:.4g} outside [0, 1]; clamped", PowerbenchWarning, stacklevel=2)
        c2 = min(max(c2, 0.0), 1.0)
    return float(c2)


def correlation_coefficient(run_resampled: TimeSeries, mean_profile: TimeSeries) -> float:
    """Pearson correlation of the two sample vectors."""
    _check_same_grid(run_resampled, mean_profile)
    x = run_resampled.values - np.mean(run_resampled.values)
    y = mean_profile.values - np.mean(mean_profile.values)
    sxx = float(np.dot(x, x))
    syy = float(np.dot(y, y))
    if sxx == 0 or syy == 0:
        raise MetricDomainError("correlation undefined for constant signal")
    rho = float(np.dot(x, y)) / math.sqrt(sxx * syy)
    return min(max(rho, -1.0), 1.0)


def reliability_coefficient(
    c1: float, c2: float, c3: float, weights: ReliabilityWeights = ReliabilityWeights()
) -> float:
    w = weights
    return (w.w1 * c1 + w.w2 * c2 + w.w3 * abs(c3)) / (w.w1 + w.w2 + w.w3)


def evaluate_reliability(
    experiment: ExperimentSet,
    weights: ReliabilityWeights = ReliabilityWeights(),
    grid_dt: float | None = None,
    include_failed_in_c13: bool = True,
    cv_floor: float = DEFAULT_CV_FLOOR,
) -> ReliabilityResult:
    if experiment.n_succ == 0:
        raise MetricDomainError(f"{experiment.label}: no successful runs")
    grid = common_grid(experiment, grid_dt)
    profiles = [resample(r.power, grid) for r in experiment.runs]
    rows = np.vstack([p.values for p in profiles])
    ok = np.array([r.success for r in experiment.runs])
    mean_profile = TimeSeries(grid, _shifted_mean(rows[ok]))

    c1 = tuple(nrmse_coefficient(p, mean_profile) for p in profiles)
    c3 = tuple(correlation_coefficient(p, mean_profile) for p in profiles)
    c2 = variation_coefficient(profiles, mean_profile, cv_floor)
    if include_failed_in_c13:
        c1_mean, c3_mean = float(np.mean(c1)), float(np.mean(c3))
    else:
        c1_mean = float(np.mean(np.asarray(c1)[ok]))
        c3_mean = float(np.mean(np.asarray(c3)[ok]))

    dropped = tuple(r.power.end - grid[-1] for r in experiment.runs)
    return ReliabilityResult(
        run_ids=tuple(r.id for r in experiment.runs),
        success=tuple(bool(s) for s in ok),
        grid=grid,
        mean_profile=mean_profile,
        c1=c1,
        c3=c3,
        c1_mean=c1_mean,
        c2=c2,
        c3_mean=c3_mean,
        f_R=reliability_coefficient(c1_mean, c2, c3_mean, weights),
        weights=weights,
        include_failed_in_c13=include_failed_in_c13,
        dropped_s=dropped,
    )
