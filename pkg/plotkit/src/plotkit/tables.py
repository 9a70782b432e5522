"""CSV readers for the upstream table schemas.

Every reader validates the header before touching rows and raises
SchemaError naming the first missing column. Empty numeric cells are the
upstream sentinel for non-finite values and come back as NaN.
"""

import csv
import os

import numpy as np


class SchemaError(ValueError):
    pass


def _open_rows(path, required):
    path = os.fspath(path)
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        for column in required:
            if column not in header:
                raise SchemaError(f"{path}: missing column {column!r} "
                                  f"(header is {header})")
        return header, list(reader)


def _cell(text):
    return float(text) if text not in ("", None) else np.nan


def read_grid(path):
    """A 1D or 2D loss scan. Returns dict with alphas, betas, losses.

    2D losses come back as an (n_alpha, n_beta) array; 1D as a vector and
    betas as None. Axis values keep file order (scans write them sorted).
    """
    header, rows = _open_rows(path, ["alpha", "loss"])
    if "beta" in header:
        alphas = list(dict.fromkeys(r["alpha"] for r in rows))
        betas = list(dict.fromkeys(r["beta"] for r in rows))
        losses = np.full((len(alphas), len(betas)), np.nan)
        ai = {a: i for i, a in enumerate(alphas)}
        bj = {b: j for j, b in enumerate(betas)}
        for r in rows:
            losses[ai[r["alpha"]], bj[r["beta"]]] = _cell(r["loss"])
        return {
            "alphas": np.array([float(a) for a in alphas]),
            "betas": np.array([float(b) for b in betas]),
            "losses": losses,
        }
    alphas = np.array([float(r["alpha"]) for r in rows])
    losses = np.array([_cell(r["loss"]) for r in rows])
    return {"alphas": alphas, "betas": None, "losses": losses}


def read_scores(path):
    """Normalized per-coordinate scores; returns the score vector."""
    _, rows = _open_rows(path, ["parameter", "layer", "index", "score"])
    return np.array([_cell(r["score"]) for r in rows])


def read_sweep(path, metric="headline"):
    """Long-format sweep table -> {(regularizer, fraction): [values]}.

    Values are ordered by restart index. Runs flagged failed=1 are dropped
    from every metric, matching how the upstream summary aggregates.
    """
    _, rows = _open_rows(
        path, ["regularizer", "fraction", "restart", "metric", "value"]
    )
    failed = set()
    for r in rows:
        if r["metric"] == "failed" and float(r["value"]) != 0.0:
            failed.add((r["regularizer"], r["fraction"], r["restart"]))
    picked = {}
    for r in rows:
        if r["metric"] != metric:
            continue
        if (r["regularizer"], r["fraction"], r["restart"]) in failed:
            continue
        key = (r["regularizer"], float(r["fraction"]))
        picked.setdefault(key, []).append((int(r["restart"]), float(r["value"])))
    return {
        key: [v for _, v in sorted(pairs)] for key, pairs in picked.items()
    }
