import csv
import json

import numpy as np
import pytest

from fisherscope import ModelConfig, build_model
from fisherscope.datasets import synthetic_parity
from fisherscope.errors import ConfigError
from fisherscope.regularize import DropoutPlan
from fisherscope.seeding import derive_seed
from fisherscope.sweep import SweepReport, paired_wins, sweep
from fisherscope.training import RunRecord, TrainConfig


def pretrained():
    cfg = ModelConfig(kind="mlp", depth=2, width=8, output_dim=2, input_dim=10)
    return build_model(cfg, init_seed=0)


def run_sweep(jobs=1, restarts=2):
    model = pretrained()
    sites = [s for s, _ in model.dropout_sites]
    plans = {"none": DropoutPlan.none(), "standard": DropoutPlan.standard(sites, 0.9)}
    data = synthetic_parity(150, seed=5)
    return sweep(model, plans, data, [1.0, 0.5], restarts,
                 TrainConfig(epochs=1, batch_size=16), global_seed=3, jobs=jobs)


def fake_record(headline, restart, failed=False):
    rec = RunRecord(config={}, restart_seed=restart, regularizer="x")
    rec.train_losses = [1.0, 0.5]
    if failed:
        rec.failed = True
        rec.failure_step = 1
    else:
        rec.metrics = {"headline": headline, "accuracy": headline}
    return rec


def fake_report():
    report = SweepReport(global_seed=0, restart_seeds=[10, 11, 12])
    a = [0.9, 0.7, 0.8]
    b = [0.85, 0.75, 0.6]
    for r in range(3):
        report.runs[("alpha", 0.5, r)] = fake_record(a[r], r)
        report.runs[("beta", 0.5, r)] = fake_record(b[r], r)
    report.runs[("alpha", 1.0, 0)] = fake_record(0.99, 0)
    report.runs[("alpha", 1.0, 1)] = fake_record(0.0, 1, failed=True)
    report.runs[("beta", 1.0, 0)] = fake_record(0.97, 0)
    report.runs[("beta", 1.0, 1)] = fake_record(0.98, 1)
    return report


def test_sweep_covers_the_full_grid():
    report = run_sweep()
    assert len(report.runs) == 2 * 2 * 2
    assert report.plans() == ["none", "standard"]
    assert report.fractions() == [1.0, 0.5]
    for key, record in report.runs.items():
        assert not record.failed, key


def test_restart_seeds_are_paired_across_plans_and_fractions():
    report = run_sweep()
    expect = [derive_seed(3, "restart", r) for r in range(2)]
    assert report.restart_seeds == expect
    for (plan, fraction, restart), record in report.runs.items():
        assert record.restart_seed == expect[restart]


def test_parallel_sweep_matches_serial():
    serial = run_sweep(jobs=1)
    threaded = run_sweep(jobs=2)
    assert serial.runs.keys() == threaded.runs.keys()
    for key in serial.runs:
        assert serial.runs[key].metrics == threaded.runs[key].metrics
        assert serial.runs[key].train_losses == threaded.runs[key].train_losses


def test_cell_statistics_match_numpy():
    report = fake_report()
    cell = report.cell("alpha", 0.5)
    values = [0.9, 0.7, 0.8]
    q25, q75 = np.percentile(values, [25, 75])
    assert cell["mean"] == pytest.approx(np.mean(values))
    assert cell["max"] == 0.9
    assert cell["iqr"] == pytest.approx(q75 - q25)
    assert cell["n"] == 3 and cell["failures"] == 0
    failed_cell = report.cell("alpha", 1.0)
    assert failed_cell["n"] == 1 and failed_cell["failures"] == 1
    assert failed_cell["mean"] == pytest.approx(0.99)
    empty = report.cell("missing", 0.5)
    assert np.isnan(empty["mean"]) and empty["n"] == 0


def test_paired_wins_counts_ties_as_wins():
    report = fake_report()
    wins, total = paired_wins(report, "alpha", "beta", 0.5)
    assert (wins, total) == (2, 3)  # 0.9>0.85, 0.7<0.75, 0.8>0.6
    report.runs[("alpha", 0.5, 1)].metrics["headline"] = 0.75  # exact tie
    assert paired_wins(report, "alpha", "beta", 0.5) == (3, 3)
    # failed runs drop out of the pairing
    wins_f, total_f = paired_wins(report, "alpha", "beta", 1.0)
    assert total_f == 1 and wins_f == 1


def test_summary_and_save_layout(tmp_path):
    report = fake_report()
    out = report.summary()
    assert out["global_seed"] == 0
    assert "alpha@0.5" in out["cells"] and "beta@1.0" in out["cells"]
    paths = report.save(tmp_path / "sweepdir")
    names = sorted(p.split("/")[-1] for p in paths)
    assert "summary.json" in names and "sweep.csv" in names
    back = json.load(open(tmp_path / "sweepdir" / "summary.json"))
    assert back["cells"]["alpha@0.5"]["n"] == 3
    run_files = list((tmp_path / "sweepdir" / "runs").glob("run_*.json"))
    assert len(run_files) == len(report.runs)


def test_export_csv_long_format(tmp_path):
    report = fake_report()
    path = tmp_path / "sweep.csv"
    report.export_csv(path)
    rows = list(csv.DictReader(open(path)))
    assert set(rows[0]) == {"regularizer", "fraction", "restart", "metric", "value"}
    metrics = {r["metric"] for r in rows}
    assert {"headline", "failed", "train_loss_final"} <= metrics
    # failed runs still appear, flagged
    failed_rows = [r for r in rows if r["regularizer"] == "alpha"
                   and r["fraction"] == "1.0" and r["restart"] == "1"]
    flags = {r["metric"]: r["value"] for r in failed_rows}
    assert flags["failed"] == "1.0"
    for r in rows:
        float(r["value"])  # every value cell parses


def test_sweep_input_validation():
    model = pretrained()
    data = synthetic_parity(100, seed=0)
    with pytest.raises(ConfigError):
        sweep(model, {}, data, [1.0], 2, TrainConfig(epochs=1))
    with pytest.raises(ConfigError):
        sweep(model, {"none": DropoutPlan.none()}, data, [1.0], 1, TrainConfig(epochs=1))
