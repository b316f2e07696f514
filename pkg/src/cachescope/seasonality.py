"""Spectral seasonality detection for daily feature series.

A periodogram is the squared DFT magnitude of the mean-removed series
(no windowing or tapering), revealing periodic structure such as the
workweek cycle. The DFT is computed directly (O(N^2)) by the active
kernel backend, which is exact at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import NonFiniteInput, SeriesTooShort


@dataclass(frozen=True)
class PeriodogramPoint:
    """One spectral bin: frequency in cycles/day, period in days, power."""

    frequency: float
    period: float
    power: float


def periodogram(series: Sequence[float]) -> list[PeriodogramPoint]:
    """Periodogram of a daily series: bins k = 1..N//2.

    power[k] = |DFT_k(x - mean)|^2 / N at frequency k/N cycles per day.
    The zero-frequency bin is dropped (mean removal zeroes it).
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.size < 4:
        raise SeriesTooShort(f"periodogram needs >= 4 points, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("series contains NaN or infinity")
    power = kernels.dft_power(np.ascontiguousarray(x))
    n = x.size
    return [
        PeriodogramPoint(frequency=k / n, period=n / k, power=float(power[k - 1]))
        for k in range(1, n // 2 + 1)
    ]


def detect_peaks(points: Sequence[PeriodogramPoint], k: int) -> list[PeriodogramPoint]:
    """Top-k bins by power (descending), ties broken toward shorter periods."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = sorted(points, key=lambda p: (-p.power, p.period))
    return ranked[: min(k, len(ranked))]
