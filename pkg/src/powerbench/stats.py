"""Paired t-tests, confidence bands and heat-map matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .core import ExperimentSet, resample
from .errors import MetricDomainError, ValidationError
from .wear import WearResult, alpha_stress, total_alpha

SIGNIFICANCE = 0.05


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: int
    p_value: float
    significant_at_0_05: bool


@dataclass(frozen=True, eq=False)
class BandProfile:
    grid: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float = 0.95


def t_sf_two_sided(t: float, df: int) -> float:
    """P(|T| >= |t|) for Student's t with df degrees of freedom."""
    # I_x(df/2, 1/2) with x = df / (df + t^2)
    x = df / (df + t * t)
    return float(min(max(special.betainc(0.5 * df, 0.5, x), 0.0), 1.0))


def t_critical(level: float, df: int) -> float:
    """Two-sided critical value: P(|T| <= t_crit) = level."""
    if not 0 < level < 1:
        raise ValidationError(f"confidence level must be in (0, 1), got {level!r}")
    if df < 1:
        raise ValidationError(f"degrees of freedom must be >= 1, got {df}")
    return float(special.stdtrit(df, 0.5 + 0.5 * level))


def paired_t_test(a, b) -> TTestResult:
    """Two-sided paired t-test, pairing by position."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError(f"paired samples must be 1-D and equal length ({a.shape} vs {b.shape})")
    n = a.size
    if n < 2:
        raise ValidationError("paired t-test needs at least 2 pairs")
    d = a - b
    sd = float(np.std(d, ddof=1))
    if sd == 0:
        raise MetricDomainError("degenerate pairing: differences have zero variance")
    t = float(np.mean(d)) / (sd / math.sqrt(n))
    df = n - 1
    p = t_sf_two_sided(t, df)
    return TTestResult(t, df, p, p < SIGNIFICANCE)


def confidence_band(experiment: ExperimentSet, grid, level: float = 0.95) -> BandProfile:
    """Pointwise mean +- t_crit * s / sqrt(n) over all runs."""
    n = experiment.n
    if n < 2:
        raise MetricDomainError("confidence band needs at least 2 runs")
    g = np.asarray(grid, dtype=np.float64)
    rows = np.vstack([resample(r.power, g).values for r in experiment.runs])
    shifted = rows - rows[0]
    mean = rows[0] + shifted.mean(axis=0)
    half = t_critical(level, n - 1) * shifted.std(axis=0, ddof=1) / math.sqrt(n)
    return BandProfile(g, mean, mean - half, mean + half, level)


def heatmap_matrix(
    experiment: ExperimentSet,
    channel: str,
    grid,
    wear: WearResult | None = None,
) -> np.ndarray:
    """Runs x grid matrix of the power or total (joint-summed) alpha channel.

    Rows follow the set's run order. Alpha rows hold their edge values where
    the grid reaches up to one sample period past the telemetry.
    """
    g = np.asarray(grid, dtype=np.float64)
    if channel == "power":
        return np.vstack([resample(r.power, g).values for r in experiment.runs])
    if channel == "alpha":
        if wear is None:
            wear = alpha_stress(experiment)
        rows = []
        for r in experiment.runs:
            a = total_alpha(wear, r.id)
            rows.append(np.interp(np.clip(g, a.start, a.end), a.timestamps, a.values))
        return np.vstack(rows)
    raise ValidationError(f"unknown heat-map channel {channel!r} (expected 'power' or 'alpha')")
