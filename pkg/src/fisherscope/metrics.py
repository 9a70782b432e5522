"""Evaluation metrics, one family per task kind.

Classification reports accuracy, macro-F1, and Matthews correlation;
regression reports Pearson, Spearman, and their average; language modeling
reports mean cross-entropy and perplexity. Degenerate denominators
(single-class predictions, constant targets) report the metric as 0.0 with
an explicit flag instead of raising: failed runs are data, not crashes.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from ._kernels import logsumexp_rows


def accuracy(predictions, targets) -> float:
    predictions, targets = _aligned(predictions, targets)
    return float(np.mean(predictions == targets))


def macro_f1(predictions, targets) -> float:
    predictions, targets = _aligned(predictions, targets)
    classes = np.union1d(predictions, targets)
    scores = []
    for c in classes:
        tp = np.sum((predictions == c) & (targets == c))
        fp = np.sum((predictions == c) & (targets != c))
        fn = np.sum((predictions != c) & (targets == c))
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom > 0 else 0.0)
    return float(np.mean(scores))


def matthews_corrcoef(predictions, targets) -> tuple[float, bool]:
    """Multiclass Matthews correlation; returns (value, degenerate_flag)."""
    predictions, targets = _aligned(predictions, targets)
    classes = np.union1d(predictions, targets)
    k = classes.size
    cm = np.zeros((k, k))
    index = {c: i for i, c in enumerate(classes)}
    for p, t in zip(predictions, targets):
        cm[index[t], index[p]] += 1
    t_k = cm.sum(axis=1)  # true counts per class
    p_k = cm.sum(axis=0)  # predicted counts per class
    c = np.trace(cm)
    s = cm.sum()
    cov_tp = c * s - t_k @ p_k
    cov_pp = s * s - p_k @ p_k
    cov_tt = s * s - t_k @ t_k
    if cov_pp == 0 or cov_tt == 0:
        return 0.0, True
    return float(cov_tp / np.sqrt(cov_pp * cov_tt)), False


def pearson_r(x, y) -> tuple[float, bool]:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    _check_pair(x, y)
    xd = x - x.mean()
    yd = y - y.mean()
    denom = np.sqrt((xd @ xd) * (yd @ yd))
    if denom == 0:
        return 0.0, True
    return float(xd @ yd / denom), False


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the average of their positions."""
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size)
    sx = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman_rho(x, y) -> tuple[float, bool]:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    _check_pair(x, y)
    return pearson_r(_average_ranks(x), _average_ranks(y))


def cross_entropy_from_logits(logits, targets) -> float:
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    if logits.ndim != 2 or logits.shape[0] != targets.shape[0]:
        raise ConfigError(
            f"logits {logits.shape} and targets {targets.shape} are misaligned"
        )
    lse = logsumexp_rows(np.ascontiguousarray(logits))
    picked = logits[np.arange(targets.size), targets]
    return float(np.mean(lse - picked))


def _aligned(predictions, targets):
    predictions = np.asarray(predictions).ravel()
    targets = np.asarray(targets).ravel()
    _check_pair(predictions, targets)
    return predictions, targets


def _check_pair(a, b):
    if a.shape != b.shape:
        raise ConfigError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size < 2:
        raise ConfigError("metrics need at least 2 aligned values")


def compute_metrics(scores, targets, task_kind: str) -> dict:
    """Metric record for one task kind.

    scores: class logits for classification and language modeling,
    predicted values for regression. The record always contains a
    ``headline`` value oriented so that higher is better.
    """
    if task_kind == "classification":
        predictions = np.argmax(np.asarray(scores), axis=-1)
        mcc, degenerate = matthews_corrcoef(predictions, targets)
        out = {
            "accuracy": accuracy(predictions, targets),
            "macro_f1": macro_f1(predictions, targets),
            "mcc": mcc,
            "mcc_degenerate": degenerate,
        }
        out["headline"] = out["accuracy"]
        return out
    if task_kind == "regression":
        r, r_deg = pearson_r(scores, targets)
        rho, rho_deg = spearman_rho(scores, targets)
        out = {
            "pearson": r,
            "spearman": rho,
            "corr_avg": 0.5 * (r + rho),
            "corr_degenerate": r_deg or rho_deg,
        }
        out["headline"] = out["corr_avg"]
        return out
    if task_kind == "language_modeling":
        xent = cross_entropy_from_logits(scores, targets)
        out = {"cross_entropy": xent, "perplexity": float(np.exp(xent))}
        out["headline"] = -xent
        return out
    raise ConfigError(f"unknown task kind {task_kind!r}")
