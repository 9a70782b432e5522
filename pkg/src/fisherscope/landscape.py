"""Random-direction loss scans around a parameter point.

Directions are filter-normalized by default: within each group (one output
unit of a weight matrix, one vocabulary row of an embedding table, or a
whole 1-D tensor) the direction is rescaled to the parameter group's norm,
so scans are comparable across layers with different weight scales. Masks
restrict the perturbation to a chosen coordinate subset; unmasked
coordinates stay at their original values.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Batch, evaluate_graph
from .errors import ConfigError, NonFiniteError
from .fisher import FisherEstimate, top_fraction_mask
from .seeding import substream
from .tensor import ParameterSet, Role

DEFAULT_AXIS = np.linspace(-1.0, 1.0, 25)


@dataclass
class Direction:
    values: dict[str, np.ndarray]
    normalization: str
    seed: int


@dataclass
class PerturbationMask:
    values: dict[str, np.ndarray]
    provenance: str  # fisher_top | fisher_bottom | random
    fraction: float
    seed: int

    @classmethod
    def from_fisher(cls, estimate: FisherEstimate, fraction: float, select: str, seed: int = 0):
        masks = top_fraction_mask(estimate, fraction, select=select, seed=seed)
        provenance = {"top": "fisher_top", "bottom": "fisher_bottom", "random": "random"}[select]
        return cls(masks, provenance, fraction, seed)

    def popcount(self) -> int:
        return int(sum(m.sum() for m in self.values.values()))


@dataclass
class LandscapeGrid:
    alphas: np.ndarray
    betas: np.ndarray  # size 0 for 1D scans
    losses: np.ndarray  # (n_alpha,) for 1D, (n_alpha, n_beta) for 2D
    base_loss: float
    meta: dict = field(default_factory=dict)

    @property
    def is_2d(self) -> bool:
        return self.betas.size > 0


def _group_normalize(d: np.ndarray, theta: np.ndarray, role: Role) -> np.ndarray:
    """Rescale direction groups to the matching parameter group norms."""
    if theta.ndim == 2:
        # weight matrices group per output unit (last axis); embedding
        # tables group per vocabulary row (first axis)
        axis = 1 if role is Role.EMBEDDING else 0
        pn = np.linalg.norm(theta, axis=axis, keepdims=True)
        dn = np.linalg.norm(d, axis=axis, keepdims=True)
        scale = np.where(dn > 0, pn / np.where(dn > 0, dn, 1.0), 0.0)
        return d * scale
    pn = float(np.linalg.norm(theta))
    dn = float(np.linalg.norm(d))
    if pn == 0.0 or dn == 0.0:
        return np.zeros_like(d)
    return d * (pn / dn)


def random_direction(params: ParameterSet, seed: int, normalization: str = "filter") -> Direction:
    """Gaussian direction with one entry per parameter coordinate."""
    if normalization not in ("filter", "none"):
        raise ConfigError(f"normalization must be 'filter' or 'none', got {normalization!r}")
    values = {}
    for p in params:
        rng = substream(seed, "direction", p.id)
        d = rng.normal(size=p.array.shape)
        if normalization == "filter":
            d = _group_normalize(d, p.array, p.role)
        values[p.id] = d
    return Direction(values, normalization, seed)


def _masked(direction: Direction, mask) -> dict[str, np.ndarray]:
    if mask is None:
        return dict(direction.values)
    values = mask.values if isinstance(mask, PerturbationMask) else mask
    out = {}
    for pid, d in direction.values.items():
        m = values.get(pid)
        out[pid] = d * m if m is not None else np.zeros_like(d)
    return out


def _mean_loss(model_forward, batches, params) -> float:
    total, count = 0.0, 0
    for batch in batches:
        loss, _ = evaluate_graph(model_forward, batch, params)
        n = len(batch)
        total += loss * n
        count += n
    return total / count


def _as_batches(inputs, targets, batch_size):
    inputs = np.asarray(inputs)
    targets = np.asarray(targets)
    n = inputs.shape[0]
    if n == 0:
        raise ConfigError("landscape scans need a nonempty dataset")
    return [Batch(inputs[i : i + batch_size], targets[i : i + batch_size]) for i in range(0, n, batch_size)]


def scan_1d(
    model_forward,
    inputs,
    targets,
    params: ParameterSet,
    direction: Direction,
    alphas=None,
    mask=None,
    batch_size: int = 256,
) -> LandscapeGrid:
    """Mean loss along theta + alpha * (mask * direction).

    The scan works on a private parameter copy; the caller's parameters are
    never touched. Non-finite losses become NaN cells rather than aborting.
    """
    alphas = DEFAULT_AXIS.copy() if alphas is None else np.asarray(alphas, dtype=np.float64)
    if not np.any(alphas == 0.0):
        raise ConfigError("alphas must include 0 so the grid anchors at the base loss")
    batches = _as_batches(inputs, targets, batch_size)
    base_loss = _mean_loss(model_forward, batches, params)
    md = _masked(direction, mask)
    work = params.copy()
    base = {p.id: p.array for p in params}
    losses = np.empty(alphas.size)
    for i, a in enumerate(alphas):
        if a == 0.0:
            losses[i] = base_loss
            continue
        work.replace_many({pid: base[pid] + a * md[pid] for pid in base})
        try:
            losses[i] = _mean_loss(model_forward, batches, work)
        except NonFiniteError:
            losses[i] = np.nan
    meta = _scan_meta(direction, None, mask, base_loss)
    return LandscapeGrid(alphas, np.empty(0), losses, base_loss, meta)


def scan_2d(
    model_forward,
    inputs,
    targets,
    params: ParameterSet,
    delta: Direction,
    eta: Direction,
    alphas=None,
    betas=None,
    mask=None,
    batch_size: int = 256,
) -> LandscapeGrid:
    """Mean loss over theta + mask * (alpha * delta + beta * eta)."""
    alphas = DEFAULT_AXIS.copy() if alphas is None else np.asarray(alphas, dtype=np.float64)
    betas = DEFAULT_AXIS.copy() if betas is None else np.asarray(betas, dtype=np.float64)
    if not np.any(alphas == 0.0) or not np.any(betas == 0.0):
        raise ConfigError("both axes must include 0")
    batches = _as_batches(inputs, targets, batch_size)
    base_loss = _mean_loss(model_forward, batches, params)
    mdelta = _masked(delta, mask)
    meta_dir = _masked(eta, mask)
    work = params.copy()
    base = {p.id: p.array for p in params}
    losses = np.empty((alphas.size, betas.size))
    for i, a in enumerate(alphas):
        for j, b in enumerate(betas):
            if a == 0.0 and b == 0.0:
                losses[i, j] = base_loss
                continue
            work.replace_many(
                {pid: base[pid] + a * mdelta[pid] + b * meta_dir[pid] for pid in base}
            )
            try:
                losses[i, j] = _mean_loss(model_forward, batches, work)
            except NonFiniteError:
                losses[i, j] = np.nan
    meta = _scan_meta(delta, eta, mask, base_loss)
    return LandscapeGrid(alphas, betas, losses, base_loss, meta)


def _scan_meta(delta, eta, mask, base_loss) -> dict:
    meta = {
        "direction_seeds": [delta.seed] + ([eta.seed] if eta is not None else []),
        "normalization": delta.normalization,
        "base_loss": base_loss,
    }
    if isinstance(mask, PerturbationMask):
        meta["mask"] = {
            "provenance": mask.provenance,
            "fraction": mask.fraction,
            "seed": mask.seed,
            "popcount": mask.popcount(),
        }
    return meta


def sharpness_index(grid: LandscapeGrid, radius: float) -> float:
    """Mean loss rise over base within the axis-aligned radius box.

    Non-finite cells inside the radius are excluded; if nothing in-radius
    remains, that is an error rather than a silent NaN.
    """
    if grid.is_2d:
        sel = (np.abs(grid.alphas)[:, None] <= radius) & (np.abs(grid.betas)[None, :] <= radius)
    else:
        sel = np.abs(grid.alphas) <= radius
    if not np.any(sel):
        raise ConfigError(f"no grid points within radius {radius}")
    vals = grid.losses[sel]
    finite = vals[np.isfinite(vals)]
    if finite.size == 0:
        raise ConfigError(f"no finite grid points within radius {radius}")
    return float(np.mean(finite - grid.base_loss))


def export_grid(grid: LandscapeGrid, csv_path, sidecar_path=None) -> list[str]:
    """Write the grid as alpha[,beta],loss rows plus a metadata sidecar.

    Non-finite losses become empty cells.
    """
    csv_path = os.fspath(csv_path)
    if sidecar_path is None:
        sidecar_path = csv_path + ".meta.json"
    parent = os.path.dirname(csv_path)
    if parent:
        os.makedirs(parent, exist_ok=True)

    def cell(v):
        return repr(float(v)) if np.isfinite(v) else ""

    with open(csv_path, "w", newline="") as f:
        w = csv.writer(f)
        if grid.is_2d:
            w.writerow(["alpha", "beta", "loss"])
            for i, a in enumerate(grid.alphas):
                for j, b in enumerate(grid.betas):
                    w.writerow([repr(float(a)), repr(float(b)), cell(grid.losses[i, j])])
        else:
            w.writerow(["alpha", "loss"])
            for i, a in enumerate(grid.alphas):
                w.writerow([repr(float(a)), cell(grid.losses[i])])
    meta = dict(grid.meta)
    meta["base_loss"] = grid.base_loss
    meta["shape"] = [int(grid.alphas.size)] + ([int(grid.betas.size)] if grid.is_2d else [])
    with open(sidecar_path, "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")
    return [csv_path, sidecar_path]


def load_grid(csv_path, sidecar_path=None) -> LandscapeGrid:
    csv_path = os.fspath(csv_path)
    if sidecar_path is None:
        sidecar_path = csv_path + ".meta.json"
    with open(sidecar_path) as f:
        meta = json.load(f)
    with open(csv_path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = list(reader)
    two_d = header == ["alpha", "beta", "loss"]
    if not two_d and header != ["alpha", "loss"]:
        raise ConfigError(f"unrecognized grid header {header}")

    def parse(cellval):
        return float(cellval) if cellval else np.nan

    if two_d:
        alphas = sorted({float(r[0]) for r in rows})
        betas = sorted({float(r[1]) for r in rows})
        ai = {a: i for i, a in enumerate(alphas)}
        bi = {b: i for i, b in enumerate(betas)}
        losses = np.full((len(alphas), len(betas)), np.nan)
        for r in rows:
            losses[ai[float(r[0])], bi[float(r[1])]] = parse(r[2])
        return LandscapeGrid(np.array(alphas), np.array(betas), losses, meta["base_loss"], meta)
    alphas = np.array([float(r[0]) for r in rows])
    losses = np.array([parse(r[1]) for r in rows])
    return LandscapeGrid(alphas, np.empty(0), losses, meta["base_loss"], meta)
