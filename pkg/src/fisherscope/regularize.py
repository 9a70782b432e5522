"""Dropout regularizers and Fisher-guided retention schedules.

All probabilities here are retention probabilities (p = 1 keeps everything)
unless a name says drop. Standard dropout uses inverted scaling so the eval
forward needs no correction; Gaussian dropout multiplies by N(1, alpha)
noise with alpha = p_drop / (1 - p_drop); guided dropout is standard
dropout with per-site keep rates that rise with the owning layer's Fisher
aggregate, so the most information-dense layers are disturbed least.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FingerprintMismatchError
from .seeding import substream

MODES = ("bounded_interpolation", "cumulative_increment")
DEFAULT_P_LOWER = 0.85
DEFAULT_P_UPPER = 0.95


def _check_mode(mode: str, train_or_eval=("train", "eval")):
    if mode not in train_or_eval:
        raise ConfigError(f"mode must be one of {train_or_eval}, got {mode!r}")


def standard_dropout(y: np.ndarray, p_keep: float, seed, mode: str = "train") -> np.ndarray:
    """Inverted Bernoulli dropout: keep with probability p_keep, scale by 1/p_keep."""
    _check_mode(mode)
    if not 0.0 < p_keep <= 1.0:
        raise ConfigError(f"p_keep must be in (0, 1], got {p_keep}")
    y = np.asarray(y, dtype=np.float64)
    if mode == "eval" or p_keep == 1.0:
        return y.copy()
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed, "dropout")
    mask = rng.random(y.shape) < p_keep
    return y * (mask / p_keep)


def gaussian_alpha(p_drop: float) -> float:
    if not 0.0 <= p_drop < 1.0:
        raise ConfigError(f"p_drop must be in [0, 1), got {p_drop}")
    return p_drop / (1.0 - p_drop)


def gaussian_dropout(y: np.ndarray, p_drop: float, seed, mode: str = "train") -> np.ndarray:
    """Multiplicative N(1, alpha) noise with alpha = p_drop / (1 - p_drop)."""
    _check_mode(mode)
    alpha = gaussian_alpha(p_drop)
    y = np.asarray(y, dtype=np.float64)
    if mode == "eval" or alpha == 0.0:
        return y.copy()
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed, "dropout")
    # alpha is the noise variance
    return y * rng.normal(1.0, np.sqrt(alpha), size=y.shape)


@dataclass
class DropoutSchedule:
    """Retention probabilities per dropout site, ascending in Fisher rank."""

    sites: list[tuple[str, float]]
    p_lower: float
    p_upper: float
    mode: str
    fisher_fingerprint: str = ""
    model_fingerprint: str = ""

    def probability(self, site_id: str) -> float:
        for sid, p in self.sites:
            if sid == site_id:
                return p
        raise ConfigError(f"schedule has no site {site_id!r}")

    def site_ids(self) -> list[str]:
        return [sid for sid, _ in self.sites]

    def save(self, path) -> None:
        parent = os.path.dirname(os.fspath(path))
        if parent:
            os.makedirs(parent, exist_ok=True)
        payload = {
            "kind": "dropout_schedule",
            "mode": self.mode,
            "p_lower": self.p_lower,
            "p_upper": self.p_upper,
            "fisher_fingerprint": self.fisher_fingerprint,
            "model_fingerprint": self.model_fingerprint,
            "sites": [{"site_id": s, "p": p} for s, p in self.sites],
        }
        with open(path, "w") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "DropoutSchedule":
        with open(path) as f:
            payload = json.load(f)
        if payload.get("kind") != "dropout_schedule":
            raise ConfigError(f"{path} is not a dropout schedule file")
        return cls(
            sites=[(s["site_id"], float(s["p"])) for s in payload["sites"]],
            p_lower=float(payload["p_lower"]),
            p_upper=float(payload["p_upper"]),
            mode=payload["mode"],
            fisher_fingerprint=payload.get("fisher_fingerprint", ""),
            model_fingerprint=payload.get("model_fingerprint", ""),
        )


def build_guided_schedule(
    layer_stats: dict[str, dict[str, float]],
    site_map: list[tuple[str, str]],
    p_lower: float = DEFAULT_P_LOWER,
    p_upper: float = DEFAULT_P_UPPER,
    mode: str = "bounded_interpolation",
    aggregate: str = "mean",
    fisher_fingerprint: str = "",
    model_fingerprint: str = "",
) -> DropoutSchedule:
    """Assign retention probabilities to sites by ascending layer Fisher.

    site_map is the model's (site_id, layer_id) list in architectural
    order, which also breaks ties between equal aggregates. With n sites,
    bounded_interpolation spaces probabilities evenly from p_lower to
    p_upper inclusive; cumulative_increment accumulates equal steps of
    (p_upper - p_lower) / n from zero, so keep probability is proportional
    to rank and the endpoints do NOT reach the stated bounds.
    """
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    if not 0.0 < p_lower < p_upper <= 1.0:
        raise ConfigError(
            f"need 0 < p_lower < p_upper <= 1, got ({p_lower}, {p_upper})"
        )
    n = len(site_map)
    if n < 2:
        raise ConfigError("guided schedules need at least 2 dropout sites")
    missing = [layer for _, layer in site_map if layer not in layer_stats]
    if missing:
        raise ConfigError(f"layer stats missing for site layers: {missing}")
    ranked = sorted(
        range(n), key=lambda k: (layer_stats[site_map[k][1]][aggregate], k)
    )
    if mode == "bounded_interpolation":
        step = (p_upper - p_lower) / (n - 1)
        probs = [p_lower + i * step for i in range(n)]
    else:
        delta = (p_upper - p_lower) / n
        probs = [(i + 1) * delta for i in range(n)]
    sites = [(site_map[k][0], probs[i]) for i, k in enumerate(ranked)]
    return DropoutSchedule(sites, p_lower, p_upper, mode, fisher_fingerprint, model_fingerprint)


@dataclass
class DropoutPlan:
    """What multiplicative noise, if any, each dropout site receives."""

    kind: str  # none | standard | gaussian | guided
    site_p: dict[str, float] = field(default_factory=dict)
    schedule: DropoutSchedule | None = None

    @classmethod
    def none(cls) -> "DropoutPlan":
        return cls("none")

    @classmethod
    def standard(cls, site_ids, p_keep: float) -> "DropoutPlan":
        if not 0.0 < p_keep <= 1.0:
            raise ConfigError(f"p_keep must be in (0, 1], got {p_keep}")
        return cls("standard", {s: p_keep for s in site_ids})

    @classmethod
    def gaussian(cls, site_ids, p_drop: float) -> "DropoutPlan":
        gaussian_alpha(p_drop)
        return cls("gaussian", {s: p_drop for s in site_ids})

    @classmethod
    def guided(cls, schedule: DropoutSchedule, site_ids) -> "DropoutPlan":
        sched_ids = set(schedule.site_ids())
        model_ids = set(site_ids)
        if sched_ids != model_ids:
            raise ConfigError(
                "guided plan must cover every dropout site exactly once; "
                f"schedule has {sorted(sched_ids)}, model has {sorted(model_ids)}"
            )
        return cls("guided", dict(schedule.sites), schedule)

    def describe(self) -> str:
        if self.kind == "none":
            return "none"
        ps = sorted(set(self.site_p.values()))
        if self.kind == "guided":
            return f"guided[{ps[0]:.4g}..{ps[-1]:.4g}]"
        return f"{self.kind}(p={ps[0]:.4g})"

    def sample_noise(self, site_id: str, shape, rng: np.random.Generator):
        """Multiplicative noise array for one train-mode site, or None."""
        if self.kind == "none":
            return None
        if site_id not in self.site_p:
            raise ConfigError(f"plan has no entry for dropout site {site_id!r}")
        p = self.site_p[site_id]
        if self.kind == "gaussian":
            alpha = gaussian_alpha(p)
            if alpha == 0.0:
                return None
            return rng.normal(1.0, np.sqrt(alpha), size=shape)
        # standard and guided both draw inverted Bernoulli masks
        if p == 1.0:
            return None
        return (rng.random(shape) < p) / p

    def check_model(self, model_fingerprint: str) -> None:
        if (
            self.schedule is not None
            and self.schedule.model_fingerprint
            and self.schedule.model_fingerprint != model_fingerprint
        ):
            raise FingerprintMismatchError(
                "dropout schedule was built for a different model "
                f"(schedule: {self.schedule.model_fingerprint[:12]}..., "
                f"given: {model_fingerprint[:12]}...)"
            )
