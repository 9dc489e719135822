import csv
import io
import json

import pytest
import yaml

from zerodrift.cli import main
from zerodrift.config import ConfigError, config_from_dict, load_config
from zerodrift.model import serialize_records
from zerodrift.pipeline import StageError, run_analyze
from zerodrift.report import emit_report, load_report, to_json

from helpers import day_records


def write_config(tmp_path, **sections):
    body = {
        "name": "test-run",
        "labels": ["negative", "neutral", "positive"],
        "inputs": [{"path": "stream.jsonl"}],
        "events": [{"name": "event", "during_start": "2020-01-31", "during_end": "2020-02-06"}],
        "stats": {"iterations": 200, "permutation_iterations": 500},
    }
    body.update(sections)
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(body))
    return path


DRIFTED = {
    "n_days": 60,
    "records_per_day": 80,
    "embedding_dim": 4,
    "drift": {"confidence_delta": -0.15, "accuracy_delta": -0.25, "vocab_shift": 0.4},
}


@pytest.fixture
def drifted_run(tmp_path):
    cfg = write_config(tmp_path, synth=DRIFTED)
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "stream.jsonl")]) == 0
    return tmp_path, cfg


def test_analyze_json_is_byte_identical(drifted_run):
    tmp, cfg = drifted_run
    assert main(["analyze", "--config", str(cfg), "--out", str(tmp / "a.json")]) == 0
    assert main(["analyze", "--config", str(cfg), "--out", str(tmp / "b.json")]) == 0
    a = (tmp / "a.json").read_bytes()
    assert a == (tmp / "b.json").read_bytes()
    report = json.loads(a)
    assert "runtime_seconds" not in report
    event = report["events"][0]
    assert event["verdict"]["detected"]
    assert {s["method"] for s in event["baselines"]["scores"]} == {
        "ks", "psi", "wasserstein", "tfidf_centroid", "mmd", "clustering_js"
    }
    boot = event["stats"]["bootstrap"]["pre_mean_confidence"]
    assert boot["iterations"] == 200 and boot["seed"] and boot["method"] == "percentile"
    assert report["config"]["stats"]["seed"] == 42


def test_exit_codes(drifted_run, tmp_path, capsys):
    tmp, cfg = drifted_run
    assert main(["analyze", "--config", str(cfg), "--fail-on-drift", "--out", str(tmp / "r.json")]) == 1
    missing = write_config(tmp_path, inputs=[{"path": "nowhere.jsonl"}])
    assert main(["analyze", "--config", str(missing)]) == 3
    assert "ingest" in capsys.readouterr().err
    bad = tmp_path / "bad.yaml"
    bad.write_text("labels: [a, b]\nbogus_section: 1\n")
    assert main(["analyze", "--config", str(bad)]) == 2
    assert main(["analyze", "--config", str(tmp_path / "absent.yaml")]) == 2
    with pytest.raises(SystemExit) as err:
        main(["analyze"])
    assert err.value.code == 2


def test_timing_flag_adds_runtime(drifted_run):
    tmp, cfg = drifted_run
    main(["analyze", "--config", str(cfg), "--timing", "--out", str(tmp / "t.json")])
    assert json.loads((tmp / "t.json").read_text())["runtime_seconds"] > 0


def test_markdown_and_csv_outputs(drifted_run):
    tmp, cfg = drifted_run
    report = run_analyze(load_config(cfg))
    md = emit_report(report, "markdown").decode()
    for measure in ("Cohen's d", "Glass's Δ", "Hedges' g", "Cliff's δ"):
        assert sum(1 for line in md.splitlines() if line.startswith(f"| {measure} |")) == 1
    assert "Customer Service (5%)" in md
    rows = list(csv.DictReader(io.StringIO(emit_report(report, "csv-series").decode())))
    windows = report.events[0]["windows"]
    assert len(rows) == windows["pre_days"] + windows["during_days"] + windows["post_days"]
    assert {r["window"] for r in rows} == {"pre", "during", "post"}
    with pytest.raises(ValueError):
        emit_report(report, "xml")


def test_report_subcommand_rerenders(drifted_run, capsysbinary):
    tmp, cfg = drifted_run
    main(["analyze", "--config", str(cfg), "--out", str(tmp / "r.json")])
    main(["analyze", "--config", str(cfg), "--emit", "markdown", "--out", str(tmp / "r.md")])
    assert main(["report", "--input", str(tmp / "r.json"), "--out", str(tmp / "again.md")]) == 0
    assert (tmp / "again.md").read_bytes() == (tmp / "r.md").read_bytes()
    report = load_report((tmp / "r.json").read_bytes())
    assert to_json(report) == (tmp / "r.json").read_bytes()


def test_baselines_subcommand(drifted_run, capsysbinary):
    tmp, cfg = drifted_run
    assert main(["baselines", "--config", str(cfg)]) == 0
    out = json.loads(capsysbinary.readouterr().out)
    assert out["event"]["comparison"] == "pre vs during"


def test_config_outputs_are_written(drifted_run):
    tmp, _ = drifted_run
    cfg = write_config(tmp, outputs={"markdown": "out.md", "csv_series": "out.csv"})
    assert main(["analyze", "--config", str(cfg), "--out", str(tmp / "x.json")]) == 0
    assert (tmp / "out.md").read_text().startswith("# Drift report")
    assert (tmp / "out.csv").read_text().startswith("event,window,day")


def test_config_validation(tmp_path):
    base = {"labels": ["a", "b"], "inputs": [{"path": "x.jsonl"}]}
    with pytest.raises(ConfigError, match="distinct"):
        config_from_dict({**base, "outputs": {"json": "x.jsonl"}}, tmp_path)
    with pytest.raises(ConfigError):
        config_from_dict({**base, "stats": {"level": 1.5}}, tmp_path)
    with pytest.raises(ConfigError):
        config_from_dict({**base, "analysis": {"baselines": ["lstm"]}}, tmp_path)
    cfg = config_from_dict(base, tmp_path)
    assert (cfg.iterations, cfg.seed, cfg.level, cfg.alpha) == (1000, 42, 0.95, 0.05)


def exact_accuracy_stream():
    days = []
    for i in range(14):
        days += day_records(i, ["positive"] * 500, [0.85] * 500, ["positive"] * 450 + ["negative"] * 50)
    days += day_records(14, ["positive"] * 1000, [0.8] * 1000, ["positive"] * 666 + ["negative"] * 334)
    for i in range(15, 18):
        days += day_records(i, ["positive"] * 500, [0.85] * 500, ["positive"] * 450 + ["negative"] * 50)
    return days


def test_23_4_point_accuracy_drop_breaches_every_profile(tmp_path):
    (tmp_path / "stream.jsonl").write_bytes(serialize_records(exact_accuracy_stream()))
    cfg = write_config(
        tmp_path,
        events=[{"name": "peak", "during_start": "2020-01-15", "during_end": "2020-01-15", "post_days": 3}],
    )
    report = run_analyze(load_config(cfg))
    verdict = report.events[0]["verdict"]
    assert verdict["max_drop"]["metric_name"] == "accuracy"
    assert verdict["max_drop"]["drop_points"] == pytest.approx(23.4, abs=1e-9)
    assert [b["multiplier"] for b in verdict["breaches"]] == [4.7, 7.8, 11.7, 2.9]
    assert [b["severity"] for b in verdict["breaches"]] == ["Critical", "Critical", "Critical", "High"]


def test_null_stream_report(tmp_path):
    synth = {
        "n_days": 20,
        "records_per_day": 4000,
        "baseline_label_probs": [0.25, 0.25, 0.5],
        "event_start": 14,
        "event_end": 16,
        "emit_text": False,
    }
    cfg = write_config(
        tmp_path,
        synth=synth,
        events=[{"name": "quiet", "during_start": "2020-01-15", "during_end": "2020-01-17", "post_days": 3}],
        analysis={"baselines": ["ks", "psi", "wasserstein"]},
    )
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "stream.jsonl")]) == 0
    event = run_analyze(load_config(cfg)).events[0]
    assert not event["verdict"]["detected"]
    for metric, drop in event["drops"].items():
        assert drop["drop_points"] < 2.0, metric


def test_stage_errors_name_the_stage(drifted_run):
    tmp, cfg = drifted_run
    config = load_config(cfg)
    from dataclasses import replace

    from zerodrift.temporal import EventConfig

    with pytest.raises(StageError) as err:
        run_analyze(replace(config, events=(EventConfig("late", "2021-01-01", "2021-01-02"),)))
    assert err.value.stage == "window"
    with pytest.raises(StageError) as err:
        run_analyze(replace(config, events=()))
    assert err.value.stage == "window"
