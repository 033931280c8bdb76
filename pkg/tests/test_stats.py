import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from powerbench import confidence_band, heatmap_matrix, paired_t_test, resample
from powerbench.errors import MetricDomainError, ValidationError
from powerbench.stats import t_critical

from conftest import const_run, make_set, profile_run

PAIRS_A = [0.912, 0.874, 0.931, 0.889, 0.905, 0.921, 0.868, 0.899, 0.917, 0.884]
PAIRS_B = [0.901, 0.869, 0.915, 0.893, 0.887, 0.911, 0.861, 0.880, 0.909, 0.872]


def simpson_two_sided_p(t, df, steps=1_000_000):
    """1 - 2 * integral_0^|t| of the Student-t density, composite Simpson."""
    c = math.exp(math.lgamma((df + 1) / 2) - math.lgamma(df / 2)) / math.sqrt(df * math.pi)
    x = np.linspace(0.0, abs(t), steps + 1)
    f = c * (1 + x * x / df) ** (-(df + 1) / 2)
    h = abs(t) / steps
    area = h / 3 * (f[0] + f[-1] + 4 * f[1:-1:2].sum() + 2 * f[2:-1:2].sum())
    return 1.0 - 2.0 * area


def mp_t_cdf(x, df):
    x = mpmath.mpf(x)
    tail = mpmath.betainc(df / 2, 0.5, 0, df / (df + x * x), regularized=True) / 2
    return 1 - tail if x >= 0 else tail


def mp_t_crit(level, df):
    lo, hi = mpmath.mpf(0), mpmath.mpf(1000)
    target = (1 + mpmath.mpf(level)) / 2
    for _ in range(200):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if mp_t_cdf(mid, df) < target else (lo, mid)
    return float((lo + hi) / 2)


def test_ttest_fixture_matches_numerical_cdf():
    with mpmath.workdps(40):
        d = [mpmath.mpf(a) - mpmath.mpf(b) for a, b in zip(PAIRS_A, PAIRS_B)]
        m = mpmath.fsum(d) / 10
        sd = mpmath.sqrt(mpmath.fsum((x - m) ** 2 for x in d) / 9)
        t_ref = float(m / (sd / mpmath.sqrt(10)))
    res = paired_t_test(PAIRS_A, PAIRS_B)
    assert res.degrees_of_freedom == 9
    assert res.t_statistic == pytest.approx(t_ref, abs=1e-9)
    assert res.p_value == pytest.approx(simpson_two_sided_p(t_ref, 9), abs=1e-9)
    assert res.significant_at_0_05 == (res.p_value < 0.05)


@given(
    st.lists(st.floats(-100, 100), min_size=3, max_size=30),
    st.integers(0, 2**31),
)
def test_ttest_antisymmetric(a, seed):
    b = (np.asarray(a) + np.random.default_rng(seed).normal(0, 1, len(a))).tolist()
    ab, ba = paired_t_test(a, b), paired_t_test(b, a)
    assert ab.t_statistic == -ba.t_statistic
    assert ab.p_value == ba.p_value
    assert 0.0 <= ab.p_value <= 1.0


def test_ttest_identical_is_degenerate():
    with pytest.raises(MetricDomainError, match="degenerate pairing"):
        paired_t_test(PAIRS_A, PAIRS_A)


def test_ttest_detects_shift(rng):
    b = rng.normal(0.9, 0.02, 10)
    res = paired_t_test(b + 0.05 + rng.normal(0, 1e-3, 10), b)
    assert res.p_value < 0.05 and res.significant_at_0_05


@pytest.mark.parametrize("a, b", [([1.0], [2.0]), ([1, 2, 3], [1, 2]), ([[1, 2]], [[1, 2]])])
def test_ttest_shape_errors(a, b):
    with pytest.raises(ValidationError):
        paired_t_test(a, b)


@pytest.mark.parametrize("level, df", [(0.95, 1), (0.95, 9), (0.99, 4), (0.5, 30)])
def test_t_critical_matches_bisection(level, df):
    with mpmath.workdps(30):
        assert t_critical(level, df) == pytest.approx(mp_t_crit(level, df), abs=1e-9)


def test_t_critical_rejects_bad_level():
    with pytest.raises(ValidationError):
        t_critical(1.0, 3)
    with pytest.raises(ValidationError):
        t_critical(0.95, 0)


def test_band_identical_runs_zero_width():
    runs = [profile_run(f"r{i}", [1.0, 3.0, 2.0]) for i in range(4)]
    band = confidence_band(make_set(runs), [0.0, 0.1, 0.2])
    np.testing.assert_array_equal(band.lower, band.upper)
    np.testing.assert_array_equal(band.mean, [1.0, 3.0, 2.0])


def test_band_ninety_one_ten():
    exp = make_set([const_run("a", 90), const_run("b", 110)])
    grid = np.linspace(0, 10, 11)
    band = confidence_band(exp, grid, 0.95)
    with mpmath.workdps(30):
        half = mp_t_crit(0.95, 1) * math.sqrt(200) / math.sqrt(2)
    np.testing.assert_allclose(band.mean, 100.0, atol=1e-12)
    np.testing.assert_allclose(band.upper - band.mean, half, rtol=1e-9)
    np.testing.assert_allclose(band.mean - band.lower, half, rtol=1e-9)


@pytest.mark.parametrize("n", [2, 4, 8, 16])
def test_band_width_scales_with_root_n(rng, n):
    runs = [const_run(f"r{i}", 100 + 5 * v) for i, v in enumerate(rng.normal(size=n))]
    exp = make_set(runs)
    grid = np.linspace(0, 10, 5)
    band = confidence_band(exp, grid)
    sigma = np.std([r.power.values[0] for r in runs], ddof=1)
    got = (band.upper - band.mean) * math.sqrt(n) / t_critical(0.95, n - 1)
    np.testing.assert_allclose(got, sigma, rtol=1e-9)


def test_band_widens_with_noise(rng):
    base = rng.normal(size=(6, 50))
    grid = np.arange(50) * 0.1
    widths = []
    for scale in (0.5, 1.0, 2.0):
        runs = [profile_run(f"r{i}", 100 + scale * row) for i, row in enumerate(base)]
        b = confidence_band(make_set(runs), grid)
        widths.append(b.upper - b.lower)
    assert np.all(widths[0] < widths[1]) and np.all(widths[1] < widths[2])


def test_band_needs_two_runs():
    with pytest.raises(MetricDomainError):
        confidence_band(make_set([const_run("a", 1)]), [0.0, 1.0])


def test_heatmap_shape_and_rows(rng):
    runs = [profile_run(f"r{i}", 100 + rng.normal(size=1200), dt=0.01) for i in range(10)]
    exp = make_set(runs)
    grid = np.linspace(0, 11.0, 1000)
    m = heatmap_matrix(exp, "power", grid)
    assert m.shape == (10, 1000)
    for i, r in enumerate(runs):
        np.testing.assert_array_equal(m[i], resample(r.power, grid).values)


def test_heatmap_identical_runs_equal_rows():
    runs = [profile_run(f"r{i}", [5.0, 1.0, 3.0, 4.0]) for i in range(3)]
    m = heatmap_matrix(make_set(runs), "power", [0.0, 0.15, 0.3])
    assert (m == m[0]).all()


def test_heatmap_unknown_channel():
    with pytest.raises(ValidationError, match="channel"):
        heatmap_matrix(make_set([const_run("a", 1)]), "torque", [0.0, 1.0])
