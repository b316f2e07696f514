"""Feature preparation for the forecaster.

Turns daily summaries into the 8-feature matrix, z-score normalizes on
the training range, optionally appends day-of-week one-hot columns, and
slices sliding windows (day window -> next-day target).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from typing import Sequence

import numpy as np

from .errors import EmptyTrain, SeriesTooShort
from .metrics import DailySummary

FEATURE_NAMES = (
    "access_count",
    "access_size",
    "hit_count",
    "hit_size",
    "miss_count",
    "miss_size",
    "reuse_count",
    "reuse_size",
)
N_FEATURES = len(FEATURE_NAMES)
N_DOW = 6
TRAIN_FRACTION = 0.8


def feature_matrix(summaries: Sequence[DailySummary]) -> np.ndarray:
    """(n_days, 8) float64 matrix of the daily features."""
    return np.array(
        [[float(getattr(s, name)) for name in FEATURE_NAMES] for s in summaries],
        dtype=np.float64,
    )


def train_size(n_days: int) -> int:
    """Days in the training split: first 80%, boundary day to train."""
    return math.ceil(TRAIN_FRACTION * n_days)


@dataclass(frozen=True)
class Normalizer:
    """Per-feature z-score transform fit on the training range only."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, train_rows: np.ndarray) -> "Normalizer":
        """Population mean/std per column; zero stds snap to 1."""
        if train_rows.size == 0:
            raise EmptyTrain("normalizer needs at least one training row")
        mean = train_rows.mean(axis=0)
        std = train_rows.std(axis=0)
        std = np.where(std == 0.0, 1.0, std)
        return cls(mean=mean, std=std)

    @classmethod
    def identity(cls, width: int = N_FEATURES) -> "Normalizer":
        return cls(mean=np.zeros(width), std=np.ones(width))

    def normalize(self, rows: np.ndarray) -> np.ndarray:
        return (rows - self.mean) / self.std

    def denormalize(self, rows: np.ndarray) -> np.ndarray:
        return rows * self.std + self.mean


def encode_day_of_week(d: date) -> np.ndarray:
    """One-hot over Monday..Saturday; Sunday encodes as all zeros."""
    vec = np.zeros(N_DOW)
    wd = d.weekday()
    if wd < N_DOW:
        vec[wd] = 1.0
    return vec


def dow_matrix(dates: Sequence[date]) -> np.ndarray:
    return np.array([encode_day_of_week(d) for d in dates])


def make_windows(
    series: np.ndarray, window_len: int, n_targets: int = N_FEATURES
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sliding windows over day rows.

    Sample i inputs rows i..i+L-1 and targets the first ``n_targets``
    columns of row i+L. Returns (X (m, L, width), Y (m, n_targets),
    target_idx (m,)) with m = len(series) - L.
    """
    n = series.shape[0]
    if window_len < 1:
        raise ValueError("window_len must be >= 1")
    if n <= window_len:
        raise SeriesTooShort(f"need more than {window_len} rows, got {n}")
    m = n - window_len
    x = np.stack([series[i : i + window_len] for i in range(m)])
    y = series[window_len:, :n_targets].copy()
    target_idx = np.arange(window_len, n)
    return x, y, target_idx
