"""Fine-tuning loop: Adam with linear warmup/decay, per-step dropout seeds,
failure accounting, and deterministic dev evaluation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .autodiff import Batch, backward, evaluate_graph
from .datasets import Dataset
from .errors import ConfigError, NonFiniteError
from .metrics import compute_metrics
from .models import Model, make_forward
from .regularize import DropoutPlan
from .seeding import derive_seed, substream


@dataclass
class TrainConfig:
    epochs: int = 3
    batch_size: int = 32
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    warmup_fraction: float = 0.10

    def validate(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be positive")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ConfigError("warmup_fraction must be in [0, 1)")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")


def lr_at(step: int, total_steps: int, peak: float, warmup_fraction: float) -> float:
    """Linear ramp from 0 to peak over the warmup steps, then linear decay to 0."""
    if total_steps <= 0:
        raise ConfigError("total_steps must be positive")
    w = int(round(total_steps * warmup_fraction))
    if w > 0 and step < w:
        return peak * step / w
    if total_steps == w:
        return peak
    return peak * (total_steps - step) / (total_steps - w)


@dataclass
class RunRecord:
    config: dict
    restart_seed: int
    regularizer: str
    train_losses: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    wall_time: float = 0.0
    failed: bool = False
    failure_step: int | None = None
    below_chance: bool = False
    chance_floor: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


class _Adam:
    def __init__(self, params, config: TrainConfig):
        self.b1 = config.adam_beta1
        self.b2 = config.adam_beta2
        self.eps = config.adam_eps
        self.m = {p.id: np.zeros(p.array.shape) for p in params}
        self.v = {p.id: np.zeros(p.array.shape) for p in params}
        self.t = 0

    def step(self, params, grads, lr: float):
        self.t += 1
        bc1 = 1.0 - self.b1**self.t
        bc2 = 1.0 - self.b2**self.t
        updates = {}
        for p in params:
            g = grads[p.id]
            m = self.m[p.id] = self.b1 * self.m[p.id] + (1.0 - self.b1) * g
            v = self.v[p.id] = self.b2 * self.v[p.id] + (1.0 - self.b2) * g * g
            updates[p.id] = p.array - lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
        params.replace_many(updates)


def evaluate_model(model: Model, dataset: Dataset, batch_size: int = 256) -> dict:
    """Eval-mode dev metrics; collects head outputs over the whole set."""
    forward = make_forward(model, dataset.task_kind)
    outputs = []
    for start in range(0, len(dataset), batch_size):
        batch = Batch(dataset.inputs[start : start + batch_size],
                      dataset.targets[start : start + batch_size])
        _, activation = evaluate_graph(forward, batch, model.params)
        outputs.append(activation.builder.logits.value)
    scores = np.concatenate(outputs, axis=0)
    if dataset.task_kind == "regression":
        return compute_metrics(scores.ravel(), dataset.targets.ravel(), "regression")
    return compute_metrics(scores, dataset.targets, dataset.task_kind)


def train(
    model: Model,
    plan: DropoutPlan,
    train_set: Dataset,
    dev_set: Dataset,
    config: TrainConfig,
    restart_seed: int,
    global_seed: int = 0,
) -> tuple[Model, RunRecord]:
    """Run the fine-tuning loop and score the dev split.

    The caller provides a model whose head is already re-initialized for
    this restart. Non-finite losses abort the run and are recorded, not
    raised. Returns the trained model and its record.
    """
    config.validate()
    plan.check_model(model.body_fingerprint())
    record = RunRecord(
        config=asdict(config),
        restart_seed=restart_seed,
        regularizer=plan.describe(),
        chance_floor=train_set.chance_floor(),
    )
    started = time.perf_counter()
    work = model.copy()
    forward = make_forward(work, train_set.task_kind, plan)
    opt = _Adam(work.params, config)
    n = len(train_set)
    steps_per_epoch = (n + config.batch_size - 1) // config.batch_size
    total_steps = steps_per_epoch * config.epochs
    step = 0
    for epoch in range(config.epochs):
        perm = substream(global_seed, "shuffle", restart_seed, epoch).permutation(n)
        epoch_loss, seen = 0.0, 0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            batch = Batch(train_set.inputs[idx], train_set.targets[idx])
            step_seed = derive_seed(global_seed, "step", restart_seed, step)
            try:
                loss, activation = evaluate_graph(
                    forward, batch, work.params, mode="train", rng_seed=step_seed
                )
                grads = backward(activation)
            except NonFiniteError:
                record.failed = True
                record.failure_step = step
                record.wall_time = time.perf_counter() - started
                return work, record
            opt.step(work.params, grads.grads, lr_at(step, total_steps, config.learning_rate, config.warmup_fraction))
            epoch_loss += loss * len(batch)
            seen += len(batch)
            step += 1
        record.train_losses.append(epoch_loss / seen)
    record.metrics = evaluate_model(work, dev_set)
    record.below_chance = record.metrics["headline"] <= record.chance_floor if (
        dev_set.task_kind == "classification"
    ) else False
    record.wall_time = time.perf_counter() - started
    return work, record
