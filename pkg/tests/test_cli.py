import json

import pytest

from cachescope.cli import run_cli
from cachescope.lstm import load_model
from cachescope.metrics import read_summaries, write_summaries
from cachescope.records import read_trace

from synth import weekly_summaries

WORKLOAD = {
    "n_files": 40,
    "n_users": 4,
    "zipf_alpha": 1.0,
    "mean_requests_per_day": 150,
    "file_size_log_mu": 21.0,
    "file_size_log_sigma": 0.5,
    "start_date": "2021-07-01",
    "end_date": "2021-07-15",
    "seed": 3,
}


@pytest.fixture()
def workload_file(tmp_path):
    path = tmp_path / "workload.json"
    path.write_text(json.dumps(WORKLOAD))
    return path


@pytest.fixture()
def trace_file(tmp_path, workload_file):
    out = tmp_path / "trace.csv"
    assert run_cli(["simulate", "--preset", "socal", "--workload", str(workload_file),
                    "-o", str(out)]) == 0
    return out


@pytest.fixture()
def summary_file(tmp_path, trace_file):
    out = tmp_path / "daily.csv"
    assert run_cli(["summarize", str(trace_file), "-o", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def synthetic_summary_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("summaries") / "daily.csv"
    write_summaries(path, weekly_summaries(n_days=45, seed=5))
    return path


def test_simulate_writes_parseable_deterministic_trace(tmp_path, workload_file):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert run_cli(["simulate", "--preset", "socal", "--workload", str(workload_file),
                    "-o", str(out1)]) == 0
    assert run_cli(["simulate", "--preset", "socal", "--workload", str(workload_file),
                    "-o", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    records = read_trace(out1)
    assert records
    assert all(r.success for r in records)


def test_simulate_seed_flag_overrides_config(tmp_path, workload_file):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    run_cli(["simulate", "--preset", "socal", "--workload", str(workload_file),
             "--seed", "99", "-o", str(out1)])
    run_cli(["simulate", "--preset", "socal", "--workload", str(workload_file),
             "-o", str(out2)])
    assert out1.read_bytes() != out2.read_bytes()


def test_simulate_custom_federation(tmp_path, workload_file):
    fed = tmp_path / "fed.json"
    fed.write_text(json.dumps({
        "nodes": [{"node_id": "a", "site": "s", "capacity_bytes": 10**15}],
        "events": [],
    }))
    out = tmp_path / "trace.csv"
    assert run_cli(["simulate", "--federation", str(fed), "--workload", str(workload_file),
                    "-o", str(out)]) == 0
    assert {r.node_id for r in read_trace(out)} == {"a"}


def test_summarize_rerun_byte_identical(tmp_path, trace_file):
    out1 = tmp_path / "s1.csv"
    out2 = tmp_path / "s2.csv"
    assert run_cli(["summarize", str(trace_file), "-o", str(out1)]) == 0
    assert run_cli(["summarize", str(trace_file), "-o", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    summaries = read_summaries(out1)
    assert sum(s.access_count for s in summaries) > 0


def test_summarize_week_period_and_ma(tmp_path, trace_file):
    out = tmp_path / "weekly.csv"
    assert run_cli(["summarize", str(trace_file), "--period", "week",
                    "--ma-window", "2", "-o", str(out)]) == 0
    header = out.read_text().splitlines()[0]
    assert "access_count_ma2" in header


def test_summarize_json_format(tmp_path, trace_file):
    out = tmp_path / "daily.json"
    assert run_cli(["summarize", str(trace_file), "--format", "json", "-o", str(out)]) == 0
    rows = json.loads(out.read_text())
    assert rows and "net_traffic_reduction" in rows[0]


def test_train_final_daily_configuration(tmp_path, synthetic_summary_file):
    model_path = tmp_path / "model.json"
    code = run_cli([
        "train", str(synthetic_summary_file),
        "--units", "128", "--act", "tanh", "--dropout", "0.04", "--epochs", "50",
        "--seed", "1", "-o", str(model_path),
    ])
    assert code == 0
    model = load_model(model_path)
    assert model.hyperparams.units1 == 128
    assert model.hyperparams.dropout == 0.04
    assert len(model.layers) == 1
    eval_path = model_path.with_name("model_eval.csv")
    assert eval_path.exists()
    assert eval_path.read_text().startswith("feature,")


def test_train_rerun_byte_identical(tmp_path, synthetic_summary_file):
    outs = []
    for name in ("m1.json", "m2.json"):
        path = tmp_path / name
        assert run_cli(["train", str(synthetic_summary_file), "--units", "8",
                        "--epochs", "2", "--seed", "7", "-o", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_train_with_dow_and_ma(tmp_path, synthetic_summary_file):
    path = tmp_path / "ma_model.json"
    assert run_cli(["train", str(synthetic_summary_file), "--units", "8", "--epochs", "2",
                    "--dow", "--ma-window", "7", "-o", str(path)]) == 0
    assert load_model(path).use_dow


def test_gridsearch_reduced(tmp_path, synthetic_summary_file):
    lb = tmp_path / "leaderboard.csv"
    best = tmp_path / "best.json"
    assert run_cli(["gridsearch", str(synthetic_summary_file), "--grid-mode", "reduced",
                    "-o", str(lb), "--model-out", str(best)]) == 0
    lines = lb.read_text().splitlines()
    assert len(lines) == 25  # header + 24 combinations
    assert best.exists()
    model = load_model(best)
    model.hyperparams.validate_on_grid()


def test_periodogram_cli(tmp_path, synthetic_summary_file):
    out = tmp_path / "peaks.csv"
    assert run_cli(["periodogram", str(synthetic_summary_file), "--top", "3",
                    "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "feature,period_days,frequency,power"
    assert len(lines) == 1 + 8 * 3
    single = tmp_path / "one.csv"
    assert run_cli(["periodogram", str(synthetic_summary_file), "--feature", "hit_count",
                    "--top", "1", "-o", str(single)]) == 0
    assert len(single.read_text().splitlines()) == 2


def test_report_cli(tmp_path, trace_file):
    out = tmp_path / "report.json"
    assert run_cli(["report", str(trace_file), "-o", str(out)]) == 0
    rows = json.loads(out.read_text())["rows"]
    assert rows[-2]["period"] == "Total"
    assert rows[-1]["period"] == "Daily Average"
    csv_out = tmp_path / "report.csv"
    assert run_cli(["report", str(trace_file), "--format", "csv", "-o", str(csv_out)]) == 0
    assert csv_out.read_text().startswith("period,accesses,transfer_tb")


def test_usage_errors_exit_1(tmp_path, capsys):
    assert run_cli([]) == 1
    assert run_cli(["frobnicate"]) == 1
    assert run_cli(["simulate", "--preset", "socal"]) == 1  # missing --workload/-o
    capsys.readouterr()


def test_data_errors_exit_2(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    assert run_cli(["summarize", str(missing), "-o", str(tmp_path / "o.csv")]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("not,a,trace\n")
    assert run_cli(["summarize", str(bad), "-o", str(tmp_path / "o.csv")]) == 2
    err = capsys.readouterr().err
    assert "bad header" in err


def test_help_exits_zero(capsys):
    assert run_cli(["--help"]) == 0
    capsys.readouterr()
