"""Diagonal empirical Fisher information and derived quantities.

The estimate is the per-coordinate mean of squared per-sample loss
gradients. With negative-log-likelihood losses (cross-entropy, half
squared error) the per-sample loss gradient is exactly the negative score,
so squaring makes the sign convention irrelevant.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass

import numpy as np

from .autodiff import Batch, evaluate_graph, per_sample_gradients
from .errors import ConfigError, FingerprintMismatchError
from .seeding import substream
from .serialize import load_blocks, save_blocks
from .tensor import ParameterSet

FISHER_KIND = "fisher"


@dataclass
class FisherEstimate:
    """Per-coordinate diagonal Fisher values, keyed like the parameters."""

    values: dict[str, np.ndarray]
    layer_of: dict[str, str]
    sample_count: int
    model_fingerprint: str

    def flat(self) -> np.ndarray:
        return np.concatenate([self.values[pid].ravel() for pid in sorted(self.values)])

    def total_size(self) -> int:
        return sum(v.size for v in self.values.values())

    def save(self, path) -> None:
        meta = {
            "sample_count": self.sample_count,
            "model_fingerprint": self.model_fingerprint,
            "layer_of": self.layer_of,
        }
        save_blocks(path, FISHER_KIND, meta, self.values)

    @classmethod
    def load(cls, path) -> "FisherEstimate":
        meta, arrays = load_blocks(path, expect_kind=FISHER_KIND)
        return cls(
            values=arrays,
            layer_of=dict(meta["layer_of"]),
            sample_count=int(meta["sample_count"]),
            model_fingerprint=meta["model_fingerprint"],
        )

    def digest(self) -> str:
        """Content hash binding downstream artifacts to this estimate."""
        h = hashlib.sha256()
        h.update(self.model_fingerprint.encode())
        for pid in sorted(self.values):
            h.update(pid.encode())
            h.update(self.values[pid].tobytes())
        return h.hexdigest()

    def check_fingerprint(self, fingerprint: str) -> None:
        if fingerprint != self.model_fingerprint:
            raise FingerprintMismatchError(
                "Fisher estimate was computed for a different model "
                f"(estimate: {self.model_fingerprint[:12]}..., "
                f"given: {fingerprint[:12]}...)"
            )


def estimate_empirical_fisher(
    model_forward,
    inputs,
    targets,
    params: ParameterSet,
    layer_of: dict[str, str],
    samples: int | None = None,
    seed: int = 0,
    model_fingerprint: str = "",
    batch_size: int = 64,
) -> FisherEstimate:
    """Mean squared per-sample gradient over a seeded subsample.

    ``samples=None`` (or >= dataset size) uses every example in dataset
    order; otherwise a uniform subsample without replacement is drawn from
    ``substream(seed, "fisher-sample")``.
    """
    inputs = np.asarray(inputs)
    targets = np.asarray(targets)
    n = inputs.shape[0]
    if n == 0:
        raise ConfigError("cannot estimate Fisher information from an empty dataset")
    if samples is None or samples >= n:
        idx = np.arange(n)
    else:
        if samples < 1:
            raise ConfigError("samples must be positive")
        rng = substream(seed, "fisher-sample")
        idx = np.sort(rng.choice(n, size=samples, replace=False))

    acc: dict[str, np.ndarray] = {}
    used = 0
    for start in range(0, idx.size, batch_size):
        part = idx[start : start + batch_size]
        batch = Batch(inputs[part], targets[part])
        for record in per_sample_gradients(model_forward, batch, params):
            for pid, g in record.grads.items():
                if pid not in acc:
                    acc[pid] = np.zeros_like(g)
                acc[pid] += g * g
            used += 1
    values = {pid: a / used for pid, a in acc.items()}
    return FisherEstimate(
        values=values,
        layer_of={pid: layer_of[pid] for pid in values},
        sample_count=used,
        model_fingerprint=model_fingerprint,
    )


def aggregate_by_layer(estimate: FisherEstimate) -> dict[str, dict[str, float]]:
    """Per-layer mean and sum of the coordinate Fisher values."""
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for pid, vals in estimate.values.items():
        layer = estimate.layer_of[pid]
        sums[layer] = sums.get(layer, 0.0) + float(vals.sum())
        counts[layer] = counts.get(layer, 0) + vals.size
    return {
        layer: {"mean": sums[layer] / counts[layer], "sum": sums[layer], "count": counts[layer]}
        for layer in sums
    }


def rank_layers(layer_stats: dict[str, dict[str, float]], key: str = "mean") -> list[str]:
    """Layer ids ordered by ascending aggregate; ties break by layer id."""
    return sorted(layer_stats, key=lambda l: (layer_stats[l][key], l))


def _mask_count(total: int, fraction: float) -> int:
    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"fraction must be in (0, 1], got {fraction}")
    # round half up so fraction 0.5 of 3 coordinates keeps 2
    return min(total, int(np.floor(total * fraction + 0.5)))


def top_fraction_mask(
    estimate: FisherEstimate, fraction: float, select: str = "top", seed: int = 0
) -> dict[str, np.ndarray]:
    """Boolean masks flagging the selected fraction of coordinates.

    select: 'top' keeps the highest-Fisher coordinates, 'bottom' the lowest,
    'random' a seeded uniform draw of the same count. Score ties resolve by
    flat index order so masks are reproducible.
    """
    flat = estimate.flat()
    total = flat.size
    k = _mask_count(total, fraction)
    if select == "top":
        order = np.lexsort((np.arange(total), -flat))
        chosen = order[:k]
    elif select == "bottom":
        order = np.lexsort((np.arange(total), flat))
        chosen = order[:k]
    elif select == "random":
        rng = substream(seed, "mask-random")
        chosen = rng.choice(total, size=k, replace=False)
    else:
        raise ConfigError(f"select must be top, bottom, or random, got {select!r}")
    mask_flat = np.zeros(total, dtype=bool)
    mask_flat[chosen] = True
    out: dict[str, np.ndarray] = {}
    offset = 0
    for pid in sorted(estimate.values):
        size = estimate.values[pid].size
        out[pid] = mask_flat[offset : offset + size].reshape(estimate.values[pid].shape).copy()
        offset += size
    return out


def stability_metrics(
    full: FisherEstimate, sub: FisherEstimate, top_k: int | None = None
) -> dict:
    """Agreement between a full-data estimate and a subsampled one.

    Cosine similarity is over the flattened coordinate vectors. The KL term
    compares the two estimates normalized to distributions (full against
    sub, with epsilon smoothing). When ``top_k`` is given, per-layer cosine
    rows are reported for layers holding at least 2 of the global top-k
    coordinates of the full estimate.
    """
    if sorted(full.values) != sorted(sub.values):
        raise ConfigError("estimates cover different parameter sets")
    a = full.flat()
    b = sub.flat()
    eps = 1e-12
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    cosine = float(a @ b / (na * nb)) if na > 0 and nb > 0 else 0.0
    pa = (a + eps) / (a + eps).sum()
    pb = (b + eps) / (b + eps).sum()
    kl = float(np.sum(pa * np.log(pa / pb)))
    out = {"cosine": cosine, "kl": kl, "layers": {}}
    if top_k is not None and top_k > 0:
        k = min(top_k, a.size)
        top_idx = np.lexsort((np.arange(a.size), -a))[:k]
        layer_index = np.empty(a.size, dtype=object)
        offset = 0
        for pid in sorted(full.values):
            size = full.values[pid].size
            layer_index[offset : offset + size] = full.layer_of[pid]
            offset += size
        by_layer: dict[str, list[int]] = {}
        for i in top_idx:
            by_layer.setdefault(layer_index[i], []).append(int(i))
        for layer, idxs in sorted(by_layer.items()):
            if len(idxs) < 2:
                continue
            va, vb = a[idxs], b[idxs]
            nva, nvb = np.linalg.norm(va), np.linalg.norm(vb)
            c = float(va @ vb / (nva * nvb)) if nva > 0 and nvb > 0 else 0.0
            out["layers"][layer] = {"cosine": c, "coords": len(idxs)}
    return out


def export_score_distributions(estimate: FisherEstimate, out_dir) -> list[str]:
    """Write three CSVs of max-normalized scores: per-coordinate, per-layer
    aggregate, and a cumulative-share curve. Returns the paths written."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    flat = estimate.flat()
    peak = float(flat.max()) if flat.size and flat.max() > 0 else 1.0

    coord_path = os.path.join(out_dir, "fisher_coords.csv")
    with open(coord_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["parameter", "layer", "index", "score"])
        for pid in sorted(estimate.values):
            layer = estimate.layer_of[pid]
            for i, v in enumerate(estimate.values[pid].ravel()):
                w.writerow([pid, layer, i, repr(float(v) / peak)])

    stats = aggregate_by_layer(estimate)
    layer_peak = max((s["mean"] for s in stats.values()), default=1.0) or 1.0
    layer_path = os.path.join(out_dir, "fisher_layers.csv")
    with open(layer_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["layer", "mean_score", "sum_score", "count"])
        for layer in rank_layers(stats):
            s = stats[layer]
            w.writerow([layer, repr(s["mean"] / layer_peak), repr(s["sum"]), s["count"]])

    cum_path = os.path.join(out_dir, "fisher_cumulative.csv")
    order = np.sort(flat)[::-1]
    total = float(order.sum()) or 1.0
    shares = np.cumsum(order) / total
    with open(cum_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["rank_fraction", "mass_fraction"])
        for i, s in enumerate(shares):
            w.writerow([repr((i + 1) / order.size), repr(float(s))])
    return [coord_path, layer_path, cum_path]


def hessian_diag_fd(
    model_forward, batch: Batch, params: ParameterSet, step: float = 1e-3
) -> dict[str, np.ndarray]:
    """Central-difference loss Hessian diagonal: (L(+h) - 2 L(0) + L(-h)) / h^2."""
    base_loss, _ = evaluate_graph(model_forward, batch, params)
    work = params.copy()
    out: dict[str, np.ndarray] = {}
    for p in params:
        base = p.array
        flat = base.reshape(-1)
        h = np.zeros(base.size)
        for j in range(base.size):
            bumped = flat.copy()
            bumped[j] = flat[j] + step
            work.replace(p.id, bumped.reshape(base.shape))
            up, _ = evaluate_graph(model_forward, batch, work)
            bumped[j] = flat[j] - step
            work.replace(p.id, bumped.reshape(base.shape))
            down, _ = evaluate_graph(model_forward, batch, work)
            h[j] = (up - 2.0 * base_loss + down) / (step * step)
        work.replace(p.id, base)
        out[p.id] = h.reshape(base.shape)
    return out
