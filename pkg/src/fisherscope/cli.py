"""Command-line pipeline: pretrain -> fisher -> schedule/landscape -> sweep.

Every command writes its artifacts plus a manifest.json recording the
resolved configuration, input digests, and output paths, so any artifact
can be traced to the exact invocation that made it. All randomness flows
from --seed through named substreams; re-running a command reproduces its
outputs byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .datasets import Dataset, char_corpus, split, synthetic_parity, synthetic_regression, tabular_csv
from .errors import FisherscopeError
from .fisher import (
    FisherEstimate,
    aggregate_by_layer,
    estimate_empirical_fisher,
    export_score_distributions,
    rank_layers,
    stability_metrics,
)
from .landscape import PerturbationMask, export_grid, random_direction, scan_1d, scan_2d
from .models import Model, ModelConfig, build_model, init_output_head, load_checkpoint, make_forward, save_checkpoint
from .regularize import (
    DEFAULT_P_LOWER,
    DEFAULT_P_UPPER,
    DropoutPlan,
    DropoutSchedule,
    build_guided_schedule,
)
from .seeding import derive_seed
from .sweep import SweepReport, paired_wins, sweep
from .training import TrainConfig, train

DEFAULT_OUT_ROOT = "fisherscope-out"


class CliError(FisherscopeError):
    pass


# -- small helpers -----------------------------------------------------------


def _out_dir(args, command: str) -> str:
    if args.out:
        return args.out
    root = os.environ.get("FISHERSCOPE_OUT_DIR", DEFAULT_OUT_ROOT)
    return os.path.join(root, command.replace(" ", "-"))


def _require_file(path, flag: str) -> str:
    if path is None:
        raise CliError(f"{flag} is required")
    if not os.path.exists(path):
        raise CliError(f"{flag}: no such file: {path}")
    return path


def _file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _parse_kv(rest: str) -> dict:
    out = {}
    if not rest:
        return out
    for part in rest.split(","):
        if "=" not in part:
            raise CliError(f"dataset option {part!r} is not key=value")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load_dataset(spec: str) -> Dataset:
    """Dataset mini-language: source:key=value,...

    parity:size=1250,seed=0,dim=10,k=3
    regression:size=1000,seed=0,dim=8
    chars:path=FILE,window=16
    tabular:path=FILE,label=COLUMN,task=classification
    """
    source, _, rest = spec.partition(":")
    opts = _parse_kv(rest)
    try:
        if source == "parity":
            return synthetic_parity(
                int(opts.get("size", 1250)), int(opts.get("seed", 0)),
                dim=int(opts.get("dim", 10)), parity_bits=int(opts.get("k", 3)),
            )
        if source == "regression":
            return synthetic_regression(
                int(opts.get("size", 1000)), int(opts.get("seed", 0)),
                dim=int(opts.get("dim", 8)),
            )
        if source == "chars":
            path = _require_file(opts.get("path"), "--data chars:path")
            return char_corpus(path, int(opts.get("window", 16)),
                               max_windows=int(opts["max"]) if "max" in opts else None,
                               seed=int(opts.get("seed", 0)))
        if source == "tabular":
            path = _require_file(opts.get("path"), "--data tabular:path")
            if "label" not in opts:
                raise CliError("--data tabular needs label=COLUMN")
            return tabular_csv(path, opts["label"], opts.get("task", "classification"))
    except ValueError as e:
        raise CliError(f"bad dataset spec {spec!r}: {e}") from e
    raise CliError(f"unknown dataset source {source!r} in --data")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError as e:
        raise CliError(f"expected comma-separated numbers, got {text!r}") from e


def _alpha_axis(range_text: str, points: int) -> np.ndarray:
    try:
        lo_s, _, hi_s = range_text.partition(":")
        lo, hi = float(lo_s), float(hi_s)
    except ValueError as e:
        raise CliError(f"--alpha-range must be LO:HI, got {range_text!r}") from e
    if not lo < 0.0 < hi:
        raise CliError("--alpha-range must straddle 0")
    axis = np.linspace(lo, hi, points)
    if not np.any(axis == 0.0):
        axis = np.sort(np.append(axis, 0.0))
    return axis


def write_manifest(out_dir, command, args, inputs, outputs) -> str:
    config = {
        k: v for k, v in sorted(vars(args).items())
        if k not in ("func", "command") and not k.startswith("_")
    }
    manifest = {
        "command": command,
        "config": config,
        "inputs": {os.fspath(p): _file_digest(p) for p in inputs},
        "outputs": sorted(os.path.relpath(p, out_dir) for p in outputs),
        "seed": getattr(args, "seed", None),
        "version": __version__,
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _load_model(args) -> Model:
    return load_checkpoint(_require_file(args.model, "--model"))


def _load_fisher(args, model: Model) -> FisherEstimate:
    est = FisherEstimate.load(_require_file(args.fisher, "--fisher"))
    est.check_fingerprint(model.fingerprint())
    return est


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs, batch_size=args.batch_size, learning_rate=args.lr,
    )


def _model_config(args, dataset: Dataset) -> ModelConfig:
    if args.arch == "mlp":
        if dataset.task_kind == "language_modeling":
            raise CliError("char data needs --arch transformer")
        out = 1 if dataset.task_kind == "regression" else dataset.n_classes
        return ModelConfig(
            kind="mlp", depth=args.depth, width=args.width,
            output_dim=out, input_dim=dataset.inputs.shape[1],
            activation=args.activation,
        )
    if dataset.vocab is None:
        raise CliError("--arch transformer expects chars data")
    return ModelConfig(
        kind="transformer_encoder", depth=args.depth, width=args.width,
        heads=args.heads, vocab_size=len(dataset.vocab),
        max_seq_len=dataset.inputs.shape[1], output_dim=len(dataset.vocab),
        activation=args.activation,
    )


# -- subcommands -------------------------------------------------------------


def cmd_pretrain(args) -> int:
    out_dir = _out_dir(args, "pretrain")
    os.makedirs(out_dir, exist_ok=True)
    dataset = load_dataset(args.data)
    config = _model_config(args, dataset)
    model = build_model(config, init_seed=derive_seed(args.seed, "init"))
    train_set, dev_set = split(dataset, derive_seed(args.seed, "pretrain-split"))
    trained, record = train(
        model, DropoutPlan.none(), train_set, dev_set, _train_config(args),
        restart_seed=derive_seed(args.seed, "pretrain-restart"), global_seed=args.seed,
    )
    ckpt = os.path.join(out_dir, "model.ckpt")
    save_checkpoint(trained, ckpt, provenance=f"pretrain --data {args.data}")
    rec_path = os.path.join(out_dir, "pretrain_record.json")
    with open(rec_path, "w") as f:
        json.dump(record.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    write_manifest(out_dir, "pretrain", args, [], [ckpt, rec_path])
    headline = record.metrics.get("headline")
    print(f"pretrained {config.kind} ({trained.params.total_size()} params) "
          f"-> {ckpt}; dev headline {headline:.4f}" if not record.failed
          else f"pretraining FAILED at step {record.failure_step}")
    return 1 if record.failed else 0


def cmd_fisher_estimate(args) -> int:
    out_dir = _out_dir(args, "fisher estimate")
    os.makedirs(out_dir, exist_ok=True)
    model = _load_model(args)
    dataset = load_dataset(args.data)
    forward = make_forward(model, dataset.task_kind)
    layer_of = {p.id: p.layer_id for p in model.params}
    estimate = estimate_empirical_fisher(
        forward, dataset.inputs, dataset.targets, model.params, layer_of,
        samples=args.samples, seed=args.seed, model_fingerprint=model.fingerprint(),
    )
    est_path = os.path.join(out_dir, "fisher.est")
    estimate.save(est_path)
    stats = aggregate_by_layer(estimate)
    layers_path = os.path.join(out_dir, "layer_ranking.json")
    with open(layers_path, "w") as f:
        json.dump({"ascending": rank_layers(stats), "stats": stats}, f,
                  indent=2, sort_keys=True)
        f.write("\n")
    write_manifest(out_dir, "fisher estimate", args, [args.model], [est_path, layers_path])
    print(f"fisher over {estimate.sample_count} samples -> {est_path}")
    return 0


def cmd_fisher_stability(args) -> int:
    out_dir = _out_dir(args, "fisher stability")
    os.makedirs(out_dir, exist_ok=True)
    model = _load_model(args)
    dataset = load_dataset(args.data)
    forward = make_forward(model, dataset.task_kind)
    layer_of = {p.id: p.layer_id for p in model.params}
    full = estimate_empirical_fisher(
        forward, dataset.inputs, dataset.targets, model.params, layer_of,
        samples=None, seed=args.seed, model_fingerprint=model.fingerprint(),
    )
    flat_full = full.flat()
    order = np.lexsort((np.arange(flat_full.size), -flat_full))
    topk_percents = _floats(args.topk)
    subsamples = _floats(args.subsamples)
    rows = []
    n = len(dataset)
    for frac in subsamples:
        m = max(2, int(round(n * frac)))
        for trial in range(args.trials):
            sub = estimate_empirical_fisher(
                forward, dataset.inputs, dataset.targets, model.params, layer_of,
                samples=m, seed=derive_seed(args.seed, "stability", trial, repr(frac)),
                model_fingerprint=model.fingerprint(),
            )
            metrics = stability_metrics(full, sub)
            rows.append((frac, trial, "cosine", metrics["cosine"]))
            rows.append((frac, trial, "kl", metrics["kl"]))
            flat_sub = sub.flat()
            for pct in topk_percents:
                k = max(2, int(round(flat_full.size * pct / 100.0)))
                idx = order[:k]
                a, b = flat_full[idx], flat_sub[idx]
                na, nb = np.linalg.norm(a), np.linalg.norm(b)
                c = float(a @ b / (na * nb)) if na > 0 and nb > 0 else 0.0
                rows.append((frac, trial, f"top{pct:g}pct_cosine", c))
    csv_path = os.path.join(out_dir, "stability.csv")
    with open(csv_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["subsample", "trial", "metric", "value"])
        for frac, trial, metric, value in rows:
            w.writerow([repr(frac), trial, metric, repr(value)])
    write_manifest(out_dir, "fisher stability", args, [args.model], [csv_path])
    print(f"stability over subsamples {subsamples} x {args.trials} trials -> {csv_path}")
    return 0


def cmd_fisher_export_dist(args) -> int:
    out_dir = _out_dir(args, "fisher export-dist")
    os.makedirs(out_dir, exist_ok=True)
    estimate = FisherEstimate.load(_require_file(args.fisher, "--fisher"))
    paths = export_score_distributions(estimate, out_dir)
    write_manifest(out_dir, "fisher export-dist", args, [args.fisher], paths)
    print("wrote " + ", ".join(os.path.basename(p) for p in paths))
    return 0


def cmd_landscape_scan(args) -> int:
    out_dir = _out_dir(args, "landscape scan")
    os.makedirs(out_dir, exist_ok=True)
    model = _load_model(args)
    estimate = _load_fisher(args, model)
    dataset = load_dataset(args.data)
    if args.samples and args.samples < len(dataset):
        dataset = Dataset(dataset.inputs[: args.samples], dataset.targets[: args.samples],
                          dataset.task_kind, dataset.source, dataset.seed, dataset.vocab)
    forward = make_forward(model, dataset.task_kind)
    mask = PerturbationMask.from_fisher(
        estimate, args.fraction, args.select, seed=derive_seed(args.seed, "mask")
    )
    axis = _alpha_axis(args.alpha_range, args.grid)
    delta = random_direction(model.params, seed=derive_seed(args.seed, "delta"))
    if args.dims == 1:
        grid = scan_1d(forward, dataset.inputs, dataset.targets, model.params,
                       delta, axis, mask=mask)
    else:
        eta = random_direction(model.params, seed=derive_seed(args.seed, "eta"))
        grid = scan_2d(forward, dataset.inputs, dataset.targets, model.params,
                       delta, eta, axis, axis.copy(), mask=mask)
    csv_path = os.path.join(out_dir, "grid.csv")
    paths = export_grid(grid, csv_path)
    write_manifest(out_dir, "landscape scan", args, [args.model, args.fisher], paths)
    print(f"{args.dims}D scan ({args.select} {args.fraction:g}) base loss "
          f"{grid.base_loss:.6f} -> {csv_path}")
    return 0


def cmd_schedule_build(args) -> int:
    out_dir = _out_dir(args, "schedule build")
    os.makedirs(out_dir, exist_ok=True)
    model = _load_model(args)
    estimate = _load_fisher(args, model)
    mode = {"bounded": "bounded_interpolation", "incremental": "cumulative_increment"}.get(args.mode)
    if mode is None:
        raise CliError(f"--mode must be bounded or incremental, got {args.mode!r}")
    stats = aggregate_by_layer(estimate)
    schedule = build_guided_schedule(
        stats, model.dropout_sites, args.p_lower, args.p_upper, mode,
        fisher_fingerprint=estimate.digest(),
        model_fingerprint=model.body_fingerprint(),
    )
    sched_path = os.path.join(out_dir, "schedule.json")
    schedule.save(sched_path)
    write_manifest(out_dir, "schedule build", args, [args.model, args.fisher], [sched_path])
    print("schedule: " + ", ".join(f"{s}={p:.4g}" for s, p in schedule.sites))
    return 0


def _build_plan(args, model: Model, name: str) -> DropoutPlan:
    sites = [s for s, _ in model.dropout_sites]
    if name == "none":
        return DropoutPlan.none()
    if name == "standard":
        return DropoutPlan.standard(sites, 1.0 - args.p_drop)
    if name == "gaussian":
        return DropoutPlan.gaussian(sites, args.p_drop)
    if name == "guided":
        schedule = DropoutSchedule.load(_require_file(args.schedule, "--schedule"))
        plan = DropoutPlan.guided(schedule, sites)
        plan.check_model(model.body_fingerprint())
        return plan
    raise CliError(f"unknown regularizer {name!r}")


def cmd_train(args) -> int:
    out_dir = _out_dir(args, "train")
    os.makedirs(out_dir, exist_ok=True)
    model = _load_model(args)
    dataset = load_dataset(args.data)
    plan = _build_plan(args, model, args.regularizer)
    restart_seed = derive_seed(args.seed, "restart", 0)
    train_set, dev_set = split(dataset, restart_seed, paucity_fraction=args.paucity)
    fresh = init_output_head(model, restart_seed)
    _, record = train(fresh, plan, train_set, dev_set, _train_config(args),
                      restart_seed=restart_seed, global_seed=args.seed)
    rec_path = os.path.join(out_dir, "run.json")
    with open(rec_path, "w") as f:
        json.dump(record.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    inputs = [args.model] + ([args.schedule] if args.regularizer == "guided" else [])
    write_manifest(out_dir, "train", args, inputs, [rec_path])
    if record.failed:
        print(f"run FAILED at step {record.failure_step} -> {rec_path}")
        return 1
    print(f"dev headline {record.metrics['headline']:.4f} "
          f"(paucity {args.paucity:g}, {args.regularizer}) -> {rec_path}")
    return 0


def cmd_sweep(args) -> int:
    out_dir = _out_dir(args, "sweep")
    os.makedirs(out_dir, exist_ok=True)
    model = _load_model(args)
    dataset = load_dataset(args.data)
    plan_names = [p for p in args.regularizers.split(",") if p]
    plans = {name: _build_plan(args, model, name) for name in plan_names}
    report = sweep(
        model, plans, dataset, _floats(args.paucity), args.restarts,
        _train_config(args), global_seed=args.seed, jobs=args.jobs,
    )
    paths = report.save(out_dir)
    inputs = [args.model] + ([args.schedule] if "guided" in plans else [])
    write_manifest(out_dir, "sweep", args, inputs, paths)
    for plan in report.plans():
        cells = [f"{f:g}: {report.cell(plan, f)['mean']:.4f}" for f in report.fractions()]
        print(f"{plan:10s} mean headline by fraction  " + "  ".join(cells))
    return 0


def cmd_report(args) -> int:
    out_dir = _out_dir(args, "report")
    os.makedirs(out_dir, exist_ok=True)
    summary_path = _require_file(os.path.join(args.sweep, "summary.json"), "--sweep")
    with open(summary_path) as f:
        summary = json.load(f)
    csv_path = os.path.join(args.sweep, "sweep.csv")
    lines = [
        "sweep report",
        f"global seed: {summary['global_seed']}",
        f"restarts: {len(summary['restart_seeds'])}",
        "",
        f"{'regularizer':>12s} {'fraction':>9s} {'mean':>9s} {'max':>9s} {'iqr':>9s} {'fail':>5s}",
    ]
    cells = summary["cells"]
    for key in sorted(cells):
        plan, frac = key.rsplit("@", 1)
        c = cells[key]
        lines.append(
            f"{plan:>12s} {float(frac):>9.3g} {c['mean']:>9.4f} {c['max']:>9.4f} "
            f"{c['iqr']:>9.4f} {c['failures']:>5d}"
        )
    if os.path.exists(csv_path):
        report = _report_from_csv(csv_path)
        if {"guided", "standard"} <= set(report.plans()):
            lines.append("")
            lines.append("paired guided-vs-standard wins (headline metric):")
            for frac in report.fractions():
                w, t = paired_wins(report, "guided", "standard", frac)
                lines.append(f"  fraction {frac:g}: {w}/{t}")
    text = "\n".join(lines) + "\n"
    out_path = os.path.join(out_dir, "report.txt")
    with open(out_path, "w") as f:
        f.write(text)
    write_manifest(out_dir, "report", args, [summary_path], [out_path])
    print(text, end="")
    return 0


def _report_from_csv(csv_path) -> SweepReport:
    """Rebuild enough of a report from the long-format table for pairing."""
    from .training import RunRecord

    report = SweepReport()
    with open(csv_path, newline="") as f:
        for row in csv.DictReader(f):
            key = (row["regularizer"], float(row["fraction"]), int(row["restart"]))
            rec = report.runs.setdefault(
                key, RunRecord(config={}, restart_seed=0, regularizer=row["regularizer"])
            )
            value = float(row["value"])
            if row["metric"] == "failed":
                rec.failed = bool(value)
            else:
                rec.metrics[row["metric"]] = value
    return report


# -- argument wiring ---------------------------------------------------------


def _add_common(p, *, seed=True, out=True):
    if seed:
        p.add_argument("--seed", type=int, default=0, help="root seed for all substreams")
    if out:
        p.add_argument("--out", default=None, help="output directory (default: $FISHERSCOPE_OUT_DIR/<command>)")
    p.add_argument("--config", default=None,
                   help="JSON file of flag values; explicit flags win")


def apply_config_file(args, argv) -> None:
    """Fill unset options from the --config JSON object, in place.

    A key applies only when its flag is absent from argv, so command-line
    values always win. Unknown keys are an error rather than a silent no-op.
    """
    with open(_require_file(args.config, "--config")) as f:
        try:
            values = json.load(f)
        except json.JSONDecodeError as e:
            raise CliError(f"--config {args.config}: invalid JSON: {e}") from e
    if not isinstance(values, dict):
        raise CliError(f"--config {args.config}: expected a JSON object of flag values")
    known = vars(args)
    for key, value in values.items():
        dest = key.replace("-", "_")
        if dest in ("func", "command", "config") or dest not in known:
            raise CliError(f"--config {args.config}: unknown option {key!r}")
        flag = "--" + dest.replace("_", "-")
        if any(a == flag or a.startswith(flag + "=") for a in argv):
            continue
        setattr(args, dest, value)


def _add_train_flags(p):
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fisherscope",
        description="Diagonal Fisher estimation, landscape probes, and guided dropout schedules for toy models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pretrain", help="train a toy model from scratch and save a checkpoint")
    p.add_argument("--data", required=True, help="dataset spec, e.g. parity:size=1250,seed=0")
    p.add_argument("--arch", choices=("mlp", "transformer"), default="mlp")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--activation", choices=("relu", "gelu"), default="relu")
    _add_train_flags(p)
    p.set_defaults(func=cmd_pretrain, epochs=40)
    _add_common(p)

    fisher = sub.add_parser("fisher", help="Fisher information commands")
    fsub = fisher.add_subparsers(dest="subcommand", required=True)

    p = fsub.add_parser("estimate", help="diagonal empirical Fisher from a checkpoint")
    p.add_argument("--model", required=True, help="checkpoint path")
    p.add_argument("--data", required=True)
    p.add_argument("--samples", type=int, default=None, help="subsample size (default: all)")
    p.set_defaults(func=cmd_fisher_estimate)
    _add_common(p)

    p = fsub.add_parser("stability", help="subsample agreement of the Fisher estimate")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--subsamples", default="0.33,0.1,0.01,0.001",
                   help="comma list of subsample fractions")
    p.add_argument("--topk", default="5,1,0.5,0.25",
                   help="comma list of top-coordinate percentages")
    p.add_argument("--trials", type=int, default=10)
    p.set_defaults(func=cmd_fisher_stability)
    _add_common(p)

    p = fsub.add_parser("export-dist", help="normalized score distribution tables")
    p.add_argument("--fisher", required=True, help="estimate file")
    p.set_defaults(func=cmd_fisher_export_dist)
    _add_common(p, seed=False)

    landscape = sub.add_parser("landscape", help="loss-landscape scans")
    lsub = landscape.add_subparsers(dest="subcommand", required=True)
    p = lsub.add_parser("scan", help="masked 1D/2D random-direction scan")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--fisher", required=True)
    p.add_argument("--select", choices=("top", "bottom", "random"), default="top")
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--dims", type=int, choices=(1, 2), default=2)
    p.add_argument("--grid", type=int, default=25, help="points per axis")
    p.add_argument("--alpha-range", default="-1:1")
    p.add_argument("--samples", type=int, default=256, help="loss-probe sample cap")
    p.set_defaults(func=cmd_landscape_scan)
    _add_common(p)

    schedule = sub.add_parser("schedule", help="guided dropout schedules")
    ssub = schedule.add_subparsers(dest="subcommand", required=True)
    p = ssub.add_parser("build", help="schedule from a Fisher layer ranking")
    p.add_argument("--model", required=True)
    p.add_argument("--fisher", required=True)
    p.add_argument("--mode", choices=("bounded", "incremental"), default="bounded")
    p.add_argument("--p-lower", type=float, default=DEFAULT_P_LOWER)
    p.add_argument("--p-upper", type=float, default=DEFAULT_P_UPPER)
    p.set_defaults(func=cmd_schedule_build)
    _add_common(p, seed=False)

    p = sub.add_parser("train", help="one fine-tuning run with a fresh head")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--regularizer", choices=("none", "standard", "gaussian", "guided"),
                   default="none")
    p.add_argument("--p-drop", type=float, default=0.1, help="drop rate for standard/gaussian")
    p.add_argument("--schedule", default=None, help="schedule file for --regularizer guided")
    p.add_argument("--paucity", type=float, default=1.0)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)
    _add_common(p)

    p = sub.add_parser("sweep", help="regularizer x paucity x restart grid")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--regularizers", default="standard,gaussian,guided")
    p.add_argument("--p-drop", type=float, default=0.1)
    p.add_argument("--schedule", default=None)
    p.add_argument("--paucity", default="1.0,0.75,0.5,0.25,0.1")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    _add_train_flags(p)
    p.set_defaults(func=cmd_sweep)
    _add_common(p)

    p = sub.add_parser("report", help="human-readable summary of a sweep directory")
    p.add_argument("--sweep", required=True, help="sweep output directory")
    p.set_defaults(func=cmd_report)
    _add_common(p, seed=False)

    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            apply_config_file(args, argv)
        return args.func(args)
    except FisherscopeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
