import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cachescope.errors import NonFiniteInput, SeriesTooShort
from cachescope.seasonality import detect_peaks, periodogram

import oracles


def tone(period, n, amplitude=1.0, phase=0.3):
    t = np.arange(n)
    return amplitude * np.sin(2 * np.pi * t / period + phase)


def full_spectrum_sum(points, n):
    """Reconstruct the total power over all N bins from the half spectrum."""
    total = 0.0
    for p in points:
        k = round(p.frequency * n)
        total += p.power if (n % 2 == 0 and k == n // 2) else 2.0 * p.power
    return total


def test_pure_tone_closed_form():
    n, a = 210, 3.0
    points = periodogram(tone(7, n, a))
    top = max(points, key=lambda p: p.power)
    assert top.period == pytest.approx(7.0, rel=1e-12)
    assert top.power == pytest.approx(n * a * a / 4.0, rel=1e-9)
    rest = [p.power for p in points if p is not top]
    assert max(rest) < 1e-9 * top.power


def test_constant_series_all_zero_power():
    points = periodogram(np.full(50, 123.4))
    assert all(p.power < 1e-15 for p in points)


def test_two_tones_ordered_by_amplitude():
    n = 217  # 31 * 7: both tones land on exact bins
    series = tone(7, n, 2.0) + tone(31, n, 1.0)
    points = periodogram(series)
    peaks = detect_peaks(points, 2)
    assert peaks[0].period == pytest.approx(7.0)
    assert peaks[1].period == pytest.approx(31.0)
    assert peaks[0].power == pytest.approx(n * 4.0 / 4.0, rel=1e-6)
    assert peaks[1].power == pytest.approx(n * 1.0 / 4.0, rel=1e-6)


def test_detect_peaks_clamps_and_orders_ties():
    points = periodogram(np.full(20, 5.0))  # all powers ~0
    everything = detect_peaks(points, 99)
    assert len(everything) == len(points) == 10
    periods = [p.period for p in everything]
    assert periods == sorted(periods)  # tie rule: smaller period first
    with pytest.raises(ValueError):
        detect_peaks(points, 0)


def test_bin_geometry():
    points = periodogram(np.arange(12.0))
    assert len(points) == 6
    assert points[0].frequency == pytest.approx(1 / 12)
    assert points[0].period == pytest.approx(12.0)
    for p in points:
        assert p.period == pytest.approx(1.0 / p.frequency, rel=1e-12)
        assert p.power >= 0.0


def test_errors():
    with pytest.raises(SeriesTooShort):
        periodogram([1.0, 2.0, 3.0])
    with pytest.raises(NonFiniteInput):
        periodogram([1.0, np.nan, 2.0, 3.0])
    with pytest.raises(NonFiniteInput):
        periodogram([1.0, np.inf, 2.0, 3.0])


def test_matches_fft_oracle():
    rng = np.random.default_rng(2)
    for n in (8, 9, 64, 101):
        series = rng.normal(size=n) * 10
        got = np.array([p.power for p in periodogram(series)])
        want = oracles.naive_periodogram(series)
        np.testing.assert_allclose(got, want, rtol=1e-8, atol=1e-12)


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=4, max_size=120))
def test_parseval(series):
    x = np.asarray(series)
    points = periodogram(x)
    total = full_spectrum_sum(points, len(x))
    energy = float(((x - x.mean()) ** 2).sum())
    assert total == pytest.approx(energy, rel=1e-9, abs=1e-6)


@given(st.lists(st.floats(-1e4, 1e4, allow_nan=False), min_size=4, max_size=60),
       st.floats(-1e5, 1e5, allow_nan=False))
def test_constant_shift_invariance(series, shift):
    base = np.array([p.power for p in periodogram(series)])
    moved = np.array([p.power for p in periodogram(np.asarray(series) + shift)])
    np.testing.assert_allclose(moved, base, rtol=1e-6, atol=1e-5)


def test_concatenation_preserves_dominant_period():
    x = tone(7, 70, 2.0) + tone(5, 70, 0.5)
    doubled = np.concatenate([x, x])
    top1 = detect_peaks(periodogram(x), 1)[0]
    top2 = detect_peaks(periodogram(doubled), 1)[0]
    assert top1.period == pytest.approx(7.0)
    assert top2.period == pytest.approx(7.0)
