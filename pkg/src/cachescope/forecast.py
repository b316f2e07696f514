"""Forecasting pipeline: dataset prep, evaluation, and grid search.

Wires daily summaries through normalization, windowing, and the LSTM
trainer; scores models with per-feature RMSE in original units and the
2-sigma band accuracy; and runs the hyperparameter grid search ranked by
pooled test RMSE on the normalized scale.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
from dataclasses import dataclass, replace
from datetime import date
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyTest
from .features import (
    FEATURE_NAMES,
    N_FEATURES,
    Normalizer,
    dow_matrix,
    feature_matrix,
    make_windows,
    train_size,
)
from .lstm import (
    GRID_ACTIVATIONS,
    GRID_DROPOUTS,
    GRID_EPOCHS,
    GRID_UNITS1,
    GRID_UNITS2,
    ForecastModel,
    HyperParams,
    derive_seed,
    train_model,
)
from .metrics import DailySummary, moving_average

log = logging.getLogger(__name__)

REDUCED_GRID = {
    "units1": (16, 32),
    "units2": (0, 16),
    "act1": ("tanh", "relu"),
    "act2": ("tanh",),
    "dropout": (0.0, 0.04, 0.1),
    "epochs": (10,),
}

FULL_GRID = {
    "units1": GRID_UNITS1,
    "units2": GRID_UNITS2,
    "act1": GRID_ACTIVATIONS,
    "act2": GRID_ACTIVATIONS,
    "dropout": GRID_DROPOUTS,
    "epochs": GRID_EPOCHS,
}


@dataclass(frozen=True)
class Dataset:
    """Windowed, normalized samples split by target day (first 80% train)."""

    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    normalizer: Normalizer
    dates: tuple[date, ...]
    use_dow: bool


def prepare_dataset(
    summaries: Sequence[DailySummary],
    window_len: int = 7,
    use_dow: bool = False,
    ma_window: int = 0,
) -> Dataset:
    """Build train/test windows from daily summaries.

    With ``ma_window`` > 1 the 8 feature columns are smoothed with a
    trailing moving average before normalization (the MA model's input).
    Day-of-week one-hots bypass normalization. A test sample's input
    window may reach back into train days; the split is by target day.
    """
    rows = feature_matrix(summaries)
    if ma_window > 1:
        rows = np.column_stack(
            [moving_average(rows[:, j], ma_window) for j in range(rows.shape[1])]
        )
    n_train = train_size(len(rows))
    normalizer = Normalizer.fit(rows[:n_train])
    series = normalizer.normalize(rows)
    if use_dow:
        series = np.hstack([series, dow_matrix([s.date for s in summaries])])
    x, y, target_idx = make_windows(series, window_len)
    in_train = target_idx < n_train
    return Dataset(
        x_train=x[in_train],
        y_train=y[in_train],
        x_test=x[~in_train],
        y_test=y[~in_train],
        normalizer=normalizer,
        dates=tuple(s.date for s in summaries),
        use_dow=use_dow,
    )


def rmse(pred: np.ndarray, true: np.ndarray, axis: Optional[int] = None) -> np.ndarray:
    """Root mean squared error, optionally per column."""
    diff = np.asarray(pred, dtype=np.float64) - np.asarray(true, dtype=np.float64)
    return np.sqrt(np.mean(diff * diff, axis=axis))


@dataclass(frozen=True)
class EvalReport:
    """Per-feature skill of a trained model, in original units."""

    feature_names: tuple[str, ...]
    train_rmse: np.ndarray
    test_rmse: np.ndarray
    accuracy: np.ndarray
    band_half_width: np.ndarray
    overall_accuracy: float

    def rows(self) -> list[dict]:
        out = []
        for j, name in enumerate(self.feature_names):
            out.append(
                {
                    "feature": name,
                    "train_rmse": float(self.train_rmse[j]),
                    "test_rmse": float(self.test_rmse[j]),
                    "accuracy": float(self.accuracy[j]),
                    "band_half_width": float(self.band_half_width[j]),
                }
            )
        return out

    def write(self, path: Path | str, fmt: str = "csv") -> None:
        path = Path(path)
        rows = self.rows()
        if fmt == "csv":
            with path.open("w", encoding="utf-8", newline="") as f:
                writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()), lineterminator="\n")
                writer.writeheader()
                writer.writerows(rows)
                f.write(f"# overall_accuracy,{self.overall_accuracy}\n")
        elif fmt == "json":
            with path.open("w", encoding="utf-8") as f:
                json.dump(
                    {"features": rows, "overall_accuracy": self.overall_accuracy}, f, indent=2
                )
                f.write("\n")
        else:
            raise ValueError(f"unknown report format {fmt!r}")


def evaluate_model(
    model: ForecastModel,
    train: tuple[np.ndarray, np.ndarray],
    test: tuple[np.ndarray, np.ndarray],
) -> EvalReport:
    """Score a model on normalized train/test windows.

    RMSE is reported in original units. The accuracy band half-width per
    feature is 2 population standard deviations of the model's train-set
    predictions; a test target inside prediction +/- band counts as
    accurate.
    """
    x_train, y_train = train
    x_test, y_test = test
    if len(x_test) == 0:
        raise EmptyTest("evaluation needs a non-empty test set")
    nrm = model.normalizer
    pred_train = model.predict_batch(np.ascontiguousarray(x_train))
    pred_test = model.predict_batch(np.ascontiguousarray(x_test))

    train_rmse = rmse(nrm.denormalize(pred_train), nrm.denormalize(y_train), axis=0)
    test_rmse = rmse(nrm.denormalize(pred_test), nrm.denormalize(y_test), axis=0)

    band_norm = 2.0 * pred_train.std(axis=0)
    band = band_norm * nrm.std
    err = np.abs(nrm.denormalize(pred_test) - nrm.denormalize(y_test))
    accuracy = (err <= band).mean(axis=0)
    return EvalReport(
        feature_names=FEATURE_NAMES,
        train_rmse=train_rmse,
        test_rmse=test_rmse,
        accuracy=accuracy,
        band_half_width=band,
        overall_accuracy=float(accuracy.mean()),
    )


def persistence_rmse(dataset: Dataset) -> np.ndarray:
    """Per-feature test RMSE (original units) of predicting tomorrow = today."""
    nrm = dataset.normalizer
    last_day = dataset.x_test[:, -1, :N_FEATURES]
    return rmse(nrm.denormalize(last_day), nrm.denormalize(dataset.y_test), axis=0)


def enumerate_grid(
    grid: Optional[dict] = None, base: Optional[HyperParams] = None
) -> list[HyperParams]:
    """All hyperparameter combinations of a grid, in a fixed order."""
    grid = grid or FULL_GRID
    base = base or HyperParams()
    combos = []
    for units1, units2, act1, act2, dropout, epochs in itertools.product(
        grid["units1"], grid["units2"], grid["act1"], grid["act2"],
        grid["dropout"], grid["epochs"],
    ):
        combos.append(
            replace(
                base,
                units1=units1,
                units2=units2,
                act1=act1,
                act2=act2,
                dropout=dropout,
                epochs=epochs,
            )
        )
    return combos


@dataclass(frozen=True)
class LeaderboardEntry:
    index: int
    hyperparams: HyperParams
    test_rmse: float
    train_rmse: float
    n_parameters: int
    status: str = "ok"


def grid_search(
    dataset: Dataset,
    grid: Sequence[HyperParams],
    base_seed: int = 0,
) -> tuple[ForecastModel, list[LeaderboardEntry]]:
    """Train every combination and rank by pooled test RMSE (normalized).

    Each combination trains with seed base_seed XOR its grid index.
    Failing combinations are kept on the leaderboard with their error
    and sort last. Ties break toward fewer parameters, then fewer
    epochs.
    """
    if not grid:
        raise ValueError("grid must contain at least one combination")
    entries: list[LeaderboardEntry] = []
    best_model: Optional[ForecastModel] = None
    best_key = None
    for idx, hp in enumerate(grid):
        hp = replace(hp, seed=derive_seed(base_seed, idx))
        try:
            model = train_model(dataset.x_train, dataset.y_train, hp, dataset.normalizer)
            test_rmse = float(
                rmse(model.predict_batch(dataset.x_test), dataset.y_test)
            )
            train_rmse = float(
                rmse(model.predict_batch(dataset.x_train), dataset.y_train)
            )
            entry = LeaderboardEntry(
                index=idx,
                hyperparams=hp,
                test_rmse=test_rmse,
                train_rmse=train_rmse,
                n_parameters=model.n_parameters(),
                status="ok",
            )
            key = (test_rmse, entry.n_parameters, hp.epochs, idx)
            if best_key is None or key < best_key:
                best_key, best_model = key, model
        except Exception as exc:  # noqa: BLE001 - searches skip broken combos
            log.warning("grid combination %d failed: %s", idx, exc)
            entry = LeaderboardEntry(
                index=idx,
                hyperparams=hp,
                test_rmse=float("inf"),
                train_rmse=float("inf"),
                n_parameters=0,
                status=f"failed: {exc}",
            )
        entries.append(entry)
    entries.sort(
        key=lambda e: (
            e.status != "ok",
            e.test_rmse,
            e.n_parameters,
            e.hyperparams.epochs,
            e.index,
        )
    )
    if best_model is None:
        raise RuntimeError("every grid combination failed to train")
    return best_model, entries


def write_leaderboard(path: Path | str, entries: Sequence[LeaderboardEntry], fmt: str = "csv") -> None:
    """Persist a grid-search leaderboard as CSV or JSON."""
    rows = []
    for rank, e in enumerate(entries, start=1):
        row = {"rank": rank, "grid_index": e.index}
        row.update(e.hyperparams.to_dict())
        row.update(
            {
                "n_parameters": e.n_parameters,
                "train_rmse": e.train_rmse,
                "test_rmse": e.test_rmse,
                "status": e.status,
            }
        )
        rows.append(row)
    path = Path(path)
    if fmt == "csv":
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    elif fmt == "json":
        with path.open("w", encoding="utf-8") as f:
            json.dump(rows, f, indent=2)
            f.write("\n")
    else:
        raise ValueError(f"unknown leaderboard format {fmt!r}")


def fit_forecaster(
    summaries: Sequence[DailySummary],
    hp: HyperParams,
    use_dow: bool = False,
    ma_window: int = 0,
) -> tuple[ForecastModel, EvalReport, Dataset]:
    """End-to-end: summaries -> dataset -> trained model -> evaluation."""
    dataset = prepare_dataset(summaries, hp.window_len, use_dow, ma_window)
    model = train_model(dataset.x_train, dataset.y_train, hp, dataset.normalizer)
    report = evaluate_model(
        model, (dataset.x_train, dataset.y_train), (dataset.x_test, dataset.y_test)
    )
    return model, report, dataset
