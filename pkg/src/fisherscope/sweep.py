"""Regularizer-by-paucity sweeps with paired restart seeds.

Every (plan, fraction) cell reuses the same restart seeds, so each restart
index compares regularizers on an identical split, head initialization,
batch order, and noise stream; differences are attributable to the plans.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .datasets import Dataset, split
from .errors import ConfigError
from .models import Model, init_output_head
from .regularize import DropoutPlan
from .seeding import derive_seed
from .training import RunRecord, TrainConfig, train


@dataclass
class SweepReport:
    runs: dict = field(default_factory=dict)  # (plan, fraction, restart) -> RunRecord
    restart_seeds: list = field(default_factory=list)
    global_seed: int = 0

    def cell(self, plan: str, fraction: float) -> dict:
        records = [
            r for (p, f, _), r in self.runs.items() if p == plan and f == fraction
        ]
        values = [r.metrics["headline"] for r in records if not r.failed]
        failures = sum(r.failed for r in records)
        if not values:
            return {"mean": np.nan, "max": np.nan, "iqr": np.nan,
                    "n": 0, "failures": failures}
        q25, q75 = np.percentile(values, [25, 75])
        return {
            "mean": float(np.mean(values)),
            "max": float(np.max(values)),
            "iqr": float(q75 - q25),
            "n": len(values),
            "failures": failures,
        }

    def plans(self) -> list[str]:
        return sorted({p for p, _, _ in self.runs})

    def fractions(self) -> list[float]:
        return sorted({f for _, f, _ in self.runs}, reverse=True)

    def summary(self) -> dict:
        return {
            "global_seed": self.global_seed,
            "restart_seeds": self.restart_seeds,
            "cells": {
                f"{plan}@{fraction}": self.cell(plan, fraction)
                for plan in self.plans()
                for fraction in self.fractions()
            },
        }

    def save(self, out_dir) -> list[str]:
        os.makedirs(out_dir, exist_ok=True)
        runs_dir = os.path.join(out_dir, "runs")
        os.makedirs(runs_dir, exist_ok=True)
        written = []
        for (plan, fraction, restart), record in sorted(self.runs.items()):
            path = os.path.join(runs_dir, f"run_{plan}_{fraction}_{restart}.json")
            with open(path, "w") as f:
                json.dump(record.to_dict(), f, indent=2, sort_keys=True)
                f.write("\n")
            written.append(path)
        summary_path = os.path.join(out_dir, "summary.json")
        with open(summary_path, "w") as f:
            json.dump(self.summary(), f, indent=2, sort_keys=True)
            f.write("\n")
        csv_path = os.path.join(out_dir, "sweep.csv")
        self.export_csv(csv_path)
        return written + [summary_path, csv_path]

    def export_csv(self, path) -> None:
        """Long-format table: regularizer,fraction,restart,metric,value."""
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["regularizer", "fraction", "restart", "metric", "value"])
            for (plan, fraction, restart), record in sorted(self.runs.items()):
                rows = dict(record.metrics)
                rows["failed"] = float(record.failed)
                rows["train_loss_final"] = (
                    record.train_losses[-1] if record.train_losses else np.nan
                )
                for metric, value in sorted(rows.items()):
                    w.writerow([plan, repr(float(fraction)), restart, metric,
                                repr(float(value))])


def sweep(
    pretrained: Model,
    plans: dict[str, DropoutPlan],
    dataset: Dataset,
    paucity_fractions,
    restarts: int,
    config: TrainConfig,
    global_seed: int = 0,
    jobs: int = 1,
) -> SweepReport:
    """Train every (plan, paucity fraction, restart) cell and aggregate.

    Per-run failures are recorded in the report, never raised. With
    jobs > 1 runs execute concurrently but the report is identical to a
    serial sweep (each run owns its model copy and seeds).
    """
    if restarts < 2:
        raise ConfigError("need at least 2 restarts for spread statistics")
    if not plans:
        raise ConfigError("no plans given")
    fractions = [float(f) for f in paucity_fractions]
    restart_seeds = [derive_seed(global_seed, "restart", r) for r in range(restarts)]

    def one(spec) -> tuple:
        plan_name, fraction, r = spec
        restart_seed = restart_seeds[r]
        train_set, dev_set = split(dataset, restart_seed, paucity_fraction=fraction)
        model = init_output_head(pretrained, restart_seed)
        _, record = train(
            model, plans[plan_name], train_set, dev_set, config,
            restart_seed=restart_seed, global_seed=global_seed,
        )
        return (plan_name, fraction, r), record

    specs = [
        (plan_name, fraction, r)
        for plan_name in sorted(plans)
        for fraction in fractions
        for r in range(restarts)
    ]
    report = SweepReport(global_seed=global_seed, restart_seeds=restart_seeds)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for key, record in pool.map(one, specs):
                report.runs[key] = record
    else:
        for spec in specs:
            key, record = one(spec)
            report.runs[key] = record
    return report


def paired_wins(report: SweepReport, challenger: str, baseline: str, fraction: float) -> tuple[int, int]:
    """(wins-or-ties, comparisons) of challenger vs baseline per restart."""
    wins = total = 0
    for (p, f, r), rec in report.runs.items():
        if p != challenger or f != fraction or rec.failed:
            continue
        other = report.runs.get((baseline, f, r))
        if other is None or other.failed:
            continue
        total += 1
        wins += rec.metrics["headline"] >= other.metrics["headline"]
    return wins, total
