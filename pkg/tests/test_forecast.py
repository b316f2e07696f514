import json

import numpy as np
import pytest

from cachescope.errors import EmptyTest
from cachescope.features import FEATURE_NAMES
from cachescope.forecast import (
    FULL_GRID,
    REDUCED_GRID,
    enumerate_grid,
    evaluate_model,
    fit_forecaster,
    grid_search,
    persistence_rmse,
    prepare_dataset,
    rmse,
    write_leaderboard,
)
from cachescope.lstm import HyperParams, derive_seed, init_model, train_model
from cachescope.metrics import moving_average

import oracles
from synth import weekly_summaries


@pytest.fixture(scope="module")
def small_dataset():
    return prepare_dataset(weekly_summaries(n_days=60, seed=7), window_len=7)


def test_prepare_dataset_split_by_target_day():
    summaries = weekly_summaries(n_days=50, seed=1)
    ds = prepare_dataset(summaries, window_len=7)
    # 50 days -> 40 train days; window drops the first 7 targets
    assert len(ds.x_train) == 40 - 7
    assert len(ds.x_test) == 10
    assert len(ds.x_train) + len(ds.x_test) == 50 - 7
    assert ds.x_train.shape[2] == 8


def test_prepare_dataset_with_dow_width_14():
    ds = prepare_dataset(weekly_summaries(n_days=40, seed=2), window_len=3, use_dow=True)
    assert ds.x_train.shape[2] == 14
    assert ds.y_train.shape[1] == 8
    # one-hot columns bypass normalization
    dow_cols = ds.x_train[:, :, 8:]
    assert set(np.unique(dow_cols)) <= {0.0, 1.0}


def test_prepare_dataset_normalizer_fit_on_train_only():
    summaries = weekly_summaries(n_days=50, seed=3)
    ds = prepare_dataset(summaries, window_len=7)
    from cachescope.features import feature_matrix, train_size

    rows = feature_matrix(summaries)
    n_train = train_size(len(rows))
    np.testing.assert_allclose(ds.normalizer.mean, rows[:n_train].mean(axis=0))


def test_prepare_dataset_ma_smoothing():
    summaries = weekly_summaries(n_days=45, seed=4)
    ds = prepare_dataset(summaries, window_len=7, ma_window=7)
    from cachescope.features import feature_matrix, train_size

    rows = feature_matrix(summaries)
    smoothed = moving_average(rows[:, 0], 7)
    n_train = train_size(len(rows))
    want_mean = smoothed[:n_train].mean()
    assert ds.normalizer.mean[0] == pytest.approx(want_mean, rel=1e-12)


def test_rmse_matches_naive_on_five_rows():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(5, 8))
    b = rng.normal(size=(5, 8))
    assert float(rmse(a, b)) == pytest.approx(oracles.naive_rmse(a, b), rel=1e-12)
    per_feature = rmse(a, b, axis=0)
    for j in range(8):
        assert per_feature[j] == pytest.approx(oracles.naive_rmse(a[:, j], b[:, j]), rel=1e-12)


def test_evaluate_huge_band_accuracy_one(small_dataset):
    # blow up the train-prediction spread through the unbounded relu path:
    # the 2-sigma band then dwarfs every test error
    ds = small_dataset
    hp = HyperParams(units1=8, act1="relu", epochs=0, seed=1)
    model = init_model(hp, 8, np.random.default_rng(1), ds.normalizer)
    x_wild = np.abs(ds.x_train) * 1e4
    report = evaluate_model(model, (x_wild, ds.y_train), (ds.x_test, ds.y_test))
    assert report.overall_accuracy == 1.0
    assert np.all(report.accuracy == 1.0)
    assert report.band_half_width.min() > 0


def test_evaluate_exact_predictions_always_inside_band(small_dataset):
    ds = small_dataset
    hp = HyperParams(units1=8, epochs=0, seed=6)
    model = init_model(hp, 8, np.random.default_rng(6), ds.normalizer)
    exact_targets = model.predict_batch(ds.x_test)
    report = evaluate_model(model, (ds.x_train, ds.y_train), (ds.x_test, exact_targets))
    assert report.overall_accuracy == 1.0


def test_evaluate_zero_band_accuracy_zero(small_dataset):
    ds = small_dataset
    hp = HyperParams(units1=8, epochs=0, seed=2)
    model = init_model(hp, 8, np.random.default_rng(2), ds.normalizer)
    for _, arr in model.parameters():
        arr[:] = 0.0  # constant predictions: zero-width band, nonzero errors
    report = evaluate_model(model, (ds.x_train, ds.y_train), (ds.x_test, ds.y_test))
    assert np.all(report.band_half_width == 0.0)
    assert report.overall_accuracy == 0.0


def test_evaluate_empty_test_rejected(small_dataset):
    ds = small_dataset
    hp = HyperParams(units1=4, epochs=0, seed=3)
    model = init_model(hp, 8, np.random.default_rng(3), ds.normalizer)
    with pytest.raises(EmptyTest):
        evaluate_model(model, (ds.x_train, ds.y_train), (ds.x_test[:0], ds.y_test[:0]))


def test_evaluate_reports_original_units(small_dataset):
    ds = small_dataset
    hp = HyperParams(units1=8, epochs=2, seed=4)
    model = train_model(ds.x_train, ds.y_train, hp, ds.normalizer)
    report = evaluate_model(model, (ds.x_train, ds.y_train), (ds.x_test, ds.y_test))
    pred = ds.normalizer.denormalize(model.predict_batch(ds.x_test))
    true = ds.normalizer.denormalize(ds.y_test)
    np.testing.assert_allclose(report.test_rmse, rmse(pred, true, axis=0), rtol=1e-12)
    assert report.feature_names == FEATURE_NAMES


def test_persistence_baseline_definition(small_dataset):
    ds = small_dataset
    pers = persistence_rmse(ds)
    last = ds.normalizer.denormalize(ds.x_test[:, -1, :8])
    true = ds.normalizer.denormalize(ds.y_test)
    np.testing.assert_allclose(pers, rmse(last, true, axis=0), rtol=1e-12)


def test_enumerate_full_grid_is_3360():
    grid = enumerate_grid(FULL_GRID)
    assert len(grid) == 3360
    assert len(set(grid)) == 3360  # all combinations distinct
    assert len(enumerate_grid(REDUCED_GRID)) == 24
    for hp in grid[:50]:
        hp.validate_on_grid()


def test_grid_search_singleton_returns_that_model(small_dataset):
    hp = HyperParams(units1=8, epochs=2, window_len=7)
    best, entries = grid_search(small_dataset, [hp], base_seed=5)
    assert len(entries) == 1
    assert entries[0].status == "ok"
    assert best.hyperparams.units1 == 8
    assert best.hyperparams.seed == derive_seed(5, 0)


def test_grid_search_ranks_real_training_above_sabotage():
    # a learnable low-noise series: actual training must outrank the
    # epochs=0 and lr=0 saboteurs
    ds = prepare_dataset(weekly_summaries(n_days=120, seed=7, spike_rate=0.0), window_len=7)
    good = HyperParams(units1=16, epochs=25, window_len=7)
    no_epochs = HyperParams(units1=16, epochs=0, window_len=7)
    no_lr = HyperParams(units1=16, epochs=25, learning_rate=0.0, window_len=7)
    best, entries = grid_search(ds, [no_epochs, good, no_lr], base_seed=0)
    assert entries[0].index == 1
    assert entries[0].hyperparams.learning_rate > 0
    assert best.hyperparams.epochs == 25
    assert entries[0].test_rmse <= entries[1].test_rmse <= entries[2].test_rmse


def test_grid_search_skips_failures_with_report(small_dataset, monkeypatch):
    import cachescope.forecast as fc

    real_train = fc.train_model
    calls = {"n": 0}

    def flaky(x, y, hp, normalizer=None):
        calls["n"] += 1
        if calls["n"] == 1:
            raise RuntimeError("injected failure")
        return real_train(x, y, hp, normalizer)

    monkeypatch.setattr(fc, "train_model", flaky)
    hps = [HyperParams(units1=8, epochs=1, window_len=7)] * 2
    best, entries = grid_search(small_dataset, hps, base_seed=1)
    assert entries[-1].status.startswith("failed")
    assert entries[0].status == "ok"
    assert best is not None


def test_grid_search_deterministic(small_dataset):
    hps = enumerate_grid(
        {"units1": (8,), "units2": (0,), "act1": ("tanh",), "act2": ("tanh",),
         "dropout": (0.0, 0.1), "epochs": (2,)}
    )
    _, a = grid_search(small_dataset, hps, base_seed=9)
    _, b = grid_search(small_dataset, hps, base_seed=9)
    assert [(e.index, e.test_rmse) for e in a] == [(e.index, e.test_rmse) for e in b]


def test_leaderboard_files(tmp_path, small_dataset):
    hps = [HyperParams(units1=8, epochs=1, window_len=7)]
    _, entries = grid_search(small_dataset, hps)
    csv_path = tmp_path / "lb.csv"
    json_path = tmp_path / "lb.json"
    write_leaderboard(csv_path, entries, "csv")
    write_leaderboard(json_path, entries, "json")
    header = csv_path.read_text().splitlines()[0]
    assert header.startswith("rank,grid_index,units1")
    rows = json.loads(json_path.read_text())
    assert rows[0]["rank"] == 1 and rows[0]["status"] == "ok"


def test_constant_series_learned_to_under_one_percent():
    # constant features: stds snap to 1, targets normalize to 0; after the
    # final daily configuration's epochs the prediction error in original
    # units must be under 1% of the constant's magnitude
    from datetime import date, timedelta

    from cachescope.metrics import DailySummary

    magnitude = 10_000
    summaries = [
        DailySummary(
            date=date(2021, 7, 1) + timedelta(days=i), scope="ALL",
            access_count=magnitude, access_size=4 * magnitude,
            hit_count=magnitude // 2, hit_size=2 * magnitude,
            miss_count=magnitude - magnitude // 2, miss_size=2 * magnitude,
            reuse_count=magnitude // 4, reuse_size=magnitude,
            unique_reused_files=magnitude // 8,
        )
        for i in range(80)
    ]
    hp = HyperParams(units1=128, act1="tanh", dropout=0.04, epochs=50, seed=0)
    ds = prepare_dataset(summaries, hp.window_len)
    model = train_model(ds.x_train, ds.y_train, hp, ds.normalizer)
    report = evaluate_model(model, (ds.x_train, ds.y_train), (ds.x_test, ds.y_test))
    for j, name in enumerate(FEATURE_NAMES):
        scale = float(ds.normalizer.mean[j])
        assert report.test_rmse[j] < 0.01 * scale, (name, report.test_rmse[j], scale)


def test_fit_forecaster_end_to_end(tmp_path):
    summaries = weekly_summaries(n_days=60, seed=11)
    hp = HyperParams(units1=8, epochs=3, seed=2)
    model, report, dataset = fit_forecaster(summaries, hp)
    assert model.normalizer is dataset.normalizer
    assert 0.0 <= report.overall_accuracy <= 1.0
    out = tmp_path / "eval.csv"
    report.write(out, "csv")
    text = out.read_text()
    assert text.startswith("feature,train_rmse,test_rmse,accuracy,band_half_width")
    assert "# overall_accuracy" in text
    report.write(tmp_path / "eval.json", "json")
    obj = json.loads((tmp_path / "eval.json").read_text())
    assert len(obj["features"]) == 8
