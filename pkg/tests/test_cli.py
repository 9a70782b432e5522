import csv
import hashlib
import json

import pytest

from fisherscope.cli import CliError, _alpha_axis, load_dataset, main
from fisherscope.regularize import DropoutSchedule

DATA = "parity:size=80,seed=1,dim=6,k=2"
FAST = ["--epochs", "2", "--batch-size", "16"]


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Chain pretrain -> fisher estimate -> schedule build once for the module."""
    root = tmp_path_factory.mktemp("cli")
    dirs = {name: str(root / name) for name in ("pre", "fish", "sched", "train")}
    assert main(["pretrain", "--data", DATA, "--depth", "2", "--width", "8",
                 "--seed", "3", "--out", dirs["pre"], *FAST]) == 0
    ckpt = dirs["pre"] + "/model.ckpt"
    assert main(["fisher", "estimate", "--model", ckpt, "--data", DATA,
                 "--samples", "40", "--out", dirs["fish"]]) == 0
    assert main(["schedule", "build", "--model", ckpt,
                 "--fisher", dirs["fish"] + "/fisher.est",
                 "--p-lower", "0.7", "--p-upper", "1.0",
                 "--out", dirs["sched"]]) == 0
    return dirs


def manifest(out_dir):
    with open(out_dir + "/manifest.json") as f:
        return json.load(f)


def test_pretrain_outputs_and_manifest(pipeline):
    m = manifest(pipeline["pre"])
    assert set(m) == {"command", "config", "inputs", "outputs", "seed", "version"}
    assert m["command"] == "pretrain"
    assert m["outputs"] == ["model.ckpt", "pretrain_record.json"]
    assert m["seed"] == 3
    assert m["config"]["data"] == DATA
    assert m["config"]["batch_size"] == 16 and m["config"]["lr"] == 1e-3
    record = json.load(open(pipeline["pre"] + "/pretrain_record.json"))
    assert record["failed"] is False and "headline" in record["metrics"]


def test_manifest_digests_input_files(pipeline):
    m = manifest(pipeline["fish"])
    ckpt = pipeline["pre"] + "/model.ckpt"
    digest = hashlib.sha256(open(ckpt, "rb").read()).hexdigest()
    assert m["inputs"] == {ckpt: digest}
    assert m["outputs"] == ["fisher.est", "layer_ranking.json"]
    ranking = json.load(open(pipeline["fish"] + "/layer_ranking.json"))
    assert set(ranking) == {"ascending", "stats"}
    assert sorted(ranking["ascending"]) == sorted(ranking["stats"])


def test_schedule_build_artifact(pipeline, capsys):
    sched = DropoutSchedule.load(pipeline["sched"] + "/schedule.json")
    probs = [p for _, p in sched.sites]
    assert min(probs) == 0.7 and max(probs) == 1.0


def test_train_guided_from_files(pipeline):
    rc = main(["train", "--model", pipeline["pre"] + "/model.ckpt", "--data", DATA,
               "--regularizer", "guided", "--schedule", pipeline["sched"] + "/schedule.json",
               "--paucity", "0.5", "--out", pipeline["train"], *FAST])
    assert rc == 0
    run = json.load(open(pipeline["train"] + "/run.json"))
    assert run["regularizer"].startswith("guided[")
    assert 0.0 <= run["metrics"]["accuracy"] <= 1.0
    assert manifest(pipeline["train"])["inputs"].keys() == {
        pipeline["pre"] + "/model.ckpt", pipeline["sched"] + "/schedule.json"}


def test_sweep_and_report_round_trip(pipeline, tmp_path, capsys):
    sweep_dir = str(tmp_path / "sw")
    rc = main(["sweep", "--model", pipeline["pre"] + "/model.ckpt", "--data", DATA,
               "--regularizers", "standard,guided",
               "--schedule", pipeline["sched"] + "/schedule.json",
               "--paucity", "1.0,0.5", "--restarts", "2",
               "--epochs", "1", "--batch-size", "16", "--out", sweep_dir])
    assert rc == 0
    summary = json.load(open(sweep_dir + "/summary.json"))
    assert set(summary["cells"]) == {"standard@1.0", "standard@0.5",
                                     "guided@1.0", "guided@0.5"}
    rc = main(["report", "--sweep", sweep_dir, "--out", str(tmp_path / "rep")])
    assert rc == 0
    text = open(tmp_path / "rep" / "report.txt").read()
    assert "paired guided-vs-standard wins" in text
    assert "global seed: 0" in text
    assert text in capsys.readouterr().out


def test_dataset_spec_parsing():
    ds = load_dataset("parity:size=50,seed=2,dim=4,k=2")
    assert len(ds) == 50 and ds.inputs.shape[1] == 4
    with pytest.raises(CliError, match="unknown dataset source"):
        load_dataset("mnist:size=10")
    with pytest.raises(CliError, match="not key=value"):
        load_dataset("parity:size")
    with pytest.raises(CliError, match="bad dataset spec"):
        load_dataset("parity:size=lots")
    with pytest.raises(CliError, match="label=COLUMN"):
        load_dataset("tabular:path=" + __file__)


def test_errors_surface_as_exit_code_and_message(tmp_path, capsys):
    rc = main(["fisher", "estimate", "--model", str(tmp_path / "nope.ckpt"),
               "--data", DATA, "--out", str(tmp_path / "o")])
    assert rc == 1
    err = capsys.readouterr().err
    assert "--model" in err and "nope.ckpt" in err


def test_fisher_stability_table(pipeline, tmp_path):
    out = str(tmp_path / "stab")
    rc = main(["fisher", "stability", "--model", pipeline["pre"] + "/model.ckpt",
               "--data", DATA, "--subsamples", "0.5,0.1", "--topk", "5,1",
               "--trials", "2", "--out", out])
    assert rc == 0
    rows = list(csv.DictReader(open(out + "/stability.csv")))
    metrics = {r["metric"] for r in rows}
    assert metrics == {"cosine", "kl", "top5pct_cosine", "top1pct_cosine"}
    assert len(rows) == 2 * 2 * 4  # subsamples x trials x metrics


def test_config_file_fills_unset_flags(pipeline, tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"epochs": 1, "paucity": 0.5, "batch-size": 16}))
    out = str(tmp_path / "t")
    rc = main(["train", "--model", pipeline["pre"] + "/model.ckpt", "--data", DATA,
               "--regularizer", "standard", "--paucity", "1.0",
               "--config", str(cfg), "--out", out])
    assert rc == 0
    m = manifest(out)
    assert m["config"]["epochs"] == 1 and m["config"]["batch_size"] == 16
    assert m["config"]["paucity"] == 1.0  # explicit flag wins over the file

    cfg.write_text(json.dumps({"no_such_flag": 3}))
    rc = main(["train", "--model", pipeline["pre"] + "/model.ckpt", "--data", DATA,
               "--config", str(cfg), "--out", out])
    assert rc == 1 and "no_such_flag" in capsys.readouterr().err

    cfg.write_text("[1, 2]")
    rc = main(["train", "--model", pipeline["pre"] + "/model.ckpt", "--data", DATA,
               "--config", str(cfg), "--out", out])
    assert rc == 1 and "JSON object" in capsys.readouterr().err


def test_alpha_axis_contract():
    axis = _alpha_axis("-1:1", 4)  # even counts get 0 spliced in
    assert 0.0 in axis and axis[0] == -1.0 and axis[-1] == 1.0
    with pytest.raises(CliError, match="straddle"):
        _alpha_axis("0.5:1", 5)
    with pytest.raises(CliError, match="LO:HI"):
        _alpha_axis("wide", 5)
