"""Toy model zoo: an MLP and a small transformer encoder.

Both kinds expose named parameters grouped into architectural sublayers
(one dense layer, one attention projection set, one feed-forward pair, one
norm pair, one embedding table each count as a layer) and a fixed list of
dropout sites: after each hidden activation for the MLP, and after the
attention output and the feed-forward output in every transformer block.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .autodiff import GraphBuilder, Node
from .errors import ConfigError, ShapeDisagreementError
from .seeding import substream
from .serialize import load_blocks, save_blocks
from .tensor import Parameter, ParameterSet, Role, Tensor

KINDS = ("mlp", "transformer_encoder")
ACTIVATIONS = ("relu", "gelu")
FFN_MULT = 4


@dataclass
class ModelConfig:
    kind: str
    depth: int
    width: int
    output_dim: int
    input_dim: int | None = None
    heads: int | None = None
    vocab_size: int | None = None
    max_seq_len: int | None = None
    activation: str = "relu"

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.depth < 1 or self.width < 1 or self.output_dim < 1:
            raise ConfigError("depth, width, and output_dim must be positive")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}")
        if self.kind == "mlp":
            if self.input_dim is None or self.input_dim < 1:
                raise ConfigError("mlp needs a positive input_dim")
            if self.depth < 2:
                raise ConfigError(
                    "mlp depth must be at least 2: a schedule over fewer than "
                    "2 dropout sites is degenerate"
                )
        else:
            if not self.heads or self.width % self.heads != 0:
                raise ConfigError("transformer width must be divisible by heads")
            if not self.vocab_size or self.vocab_size < 2:
                raise ConfigError("transformer needs vocab_size >= 2")
            if not self.max_seq_len or self.max_seq_len < 1:
                raise ConfigError("transformer needs a positive max_seq_len")

    @property
    def dropout_sites(self) -> list[tuple[str, str]]:
        """(site_id, owning layer_id) pairs in architectural order."""
        if self.kind == "mlp":
            return [(f"site.dense{i}", f"dense{i}") for i in range(self.depth)]
        sites = []
        for i in range(self.depth):
            sites.append((f"site.block{i}.attn", f"block{i}.attn"))
            sites.append((f"site.block{i}.ffn", f"block{i}.ffn"))
        return sites

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "depth": self.depth,
            "width": self.width,
            "output_dim": self.output_dim,
            "input_dim": self.input_dim,
            "heads": self.heads,
            "vocab_size": self.vocab_size,
            "max_seq_len": self.max_seq_len,
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


def _param_specs(config: ModelConfig):
    """Yield (id, layer_id, shape, role, fan_in) for every parameter."""
    w = config.width
    if config.kind == "mlp":
        fan = config.input_dim
        for i in range(config.depth):
            yield f"dense{i}.weight", f"dense{i}", (fan, w), Role.WEIGHT, fan
            yield f"dense{i}.bias", f"dense{i}", (w,), Role.BIAS, fan
            fan = w
        yield "head.weight", "head", (w, config.output_dim), Role.WEIGHT, w
        yield "head.bias", "head", (config.output_dim,), Role.BIAS, w
        return
    yield "tok_embed.table", "tok_embed", (config.vocab_size, w), Role.EMBEDDING, w
    yield "pos_embed.table", "pos_embed", (config.max_seq_len, w), Role.EMBEDDING, w
    hidden = FFN_MULT * w
    for i in range(config.depth):
        attn = f"block{i}.attn"
        for name in ("wq", "wk", "wv", "wo"):
            yield f"{attn}.{name}", attn, (w, w), Role.WEIGHT, w
        for name in ("bq", "bk", "bv", "bo"):
            yield f"{attn}.{name}", attn, (w,), Role.BIAS, w
        norm1 = f"block{i}.norm1"
        yield f"{norm1}.scale", norm1, (w,), Role.NORM_SCALE, w
        yield f"{norm1}.shift", norm1, (w,), Role.NORM_SHIFT, w
        ffn = f"block{i}.ffn"
        yield f"{ffn}.w1", ffn, (w, hidden), Role.WEIGHT, w
        yield f"{ffn}.b1", ffn, (hidden,), Role.BIAS, w
        yield f"{ffn}.w2", ffn, (hidden, w), Role.WEIGHT, hidden
        yield f"{ffn}.b2", ffn, (w,), Role.BIAS, hidden
        norm2 = f"block{i}.norm2"
        yield f"{norm2}.scale", norm2, (w,), Role.NORM_SCALE, w
        yield f"{norm2}.shift", norm2, (w,), Role.NORM_SHIFT, w
    yield "head.weight", "head", (w, config.output_dim), Role.WEIGHT, w
    yield "head.bias", "head", (config.output_dim,), Role.BIAS, w


def _init_values(pid, shape, role, fan_in, rng):
    if role is Role.WEIGHT:
        bound = np.sqrt(6.0 / fan_in)
        return rng.uniform(-bound, bound, size=shape)
    if role is Role.EMBEDDING:
        return rng.normal(0.0, 0.02, size=shape)
    if role is Role.NORM_SCALE:
        return np.ones(shape)
    return np.zeros(shape)


@dataclass
class Model:
    config: ModelConfig
    params: ParameterSet
    init_seed: int
    dropout_sites: list[tuple[str, str]] = field(default_factory=list)

    HEAD_LAYER = "head"

    def layer_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for p in self.params:
            seen.setdefault(p.layer_id, None)
        return list(seen)

    def architectural_layers(self) -> list[str]:
        """Layer ids in architectural (construction) order."""
        order: dict[str, None] = {}
        for pid, layer_id, _, _, _ in _param_specs(self.config):
            order.setdefault(layer_id, None)
        return list(order)

    def fingerprint(self) -> str:
        config_bytes = json.dumps(self.config.to_dict(), sort_keys=True).encode()
        return self.params.fingerprint(extra=config_bytes)

    def body_fingerprint(self) -> str:
        """Fingerprint excluding the output head.

        Schedules and Fisher artifacts bind to this, since the restart
        protocol re-initializes the head while the body stays fixed.
        """
        config_bytes = json.dumps(self.config.to_dict(), sort_keys=True).encode()
        body = ParameterSet([p for p in self.params if p.layer_id != Model.HEAD_LAYER])
        return body.fingerprint(extra=config_bytes)

    def copy(self) -> "Model":
        return Model(self.config, self.params.copy(), self.init_seed, list(self.dropout_sites))


def build_model(config: ModelConfig, init_seed: int) -> Model:
    """Construct a model with seeded, deterministic initialization."""
    config.validate()
    params = []
    for pid, layer_id, shape, role, fan_in in _param_specs(config):
        rng = substream(init_seed, "init", pid)
        params.append(
            Parameter(pid, layer_id, Tensor(_init_values(pid, shape, role, fan_in, rng)), role)
        )
    return Model(config, ParameterSet(params), init_seed, config.dropout_sites)


def init_output_head(model: Model, head_seed: int) -> Model:
    """Fresh head draw from N(0, 0.02^2); every other parameter is untouched."""
    out = model.copy()
    for p in out.params:
        if p.layer_id == Model.HEAD_LAYER:
            rng = substream(head_seed, "head", p.id)
            out.params.replace(p.id, rng.normal(0.0, 0.02, size=p.array.shape))
    return out


# -- forward descriptions --------------------------------------------------


def _apply_site(g: GraphBuilder, x: Node, site_id: str, plan) -> Node:
    if plan is None or g.mode != "train":
        return x
    noise = plan.sample_noise(site_id, x.value.shape, g.site_rng(site_id))
    if noise is None:
        return x
    return g.mul_mask(x, noise, label=site_id)


def make_forward(model: Model, objective: str, plan=None):
    """Return ``forward(g, batch) -> loss node`` for this model and objective.

    objective: 'classification' (softmax cross-entropy), 'regression'
    (half squared error), or 'language_modeling' (next-token cross-entropy).
    The dropout plan, when given, is consulted at each site in train mode.
    """
    config = model.config
    if objective not in ("classification", "regression", "language_modeling"):
        raise ConfigError(f"unknown objective {objective!r}")
    if config.kind == "mlp":
        return _mlp_forward(config, objective, plan)
    return _transformer_forward(config, objective, plan)


def _loss_node(g, logits, batch, objective):
    g.logits = logits  # callers that score predictions read this off the builder
    if objective == "regression":
        return g.mse(logits, np.asarray(batch.targets, dtype=np.float64), label="loss")
    return g.cross_entropy(logits, batch.targets, label="loss")


def _mlp_forward(config, objective, plan):
    act = "relu" if config.activation == "relu" else "gelu"

    def forward(g: GraphBuilder, batch):
        x = g.constant(np.asarray(batch.inputs, dtype=np.float64))
        if x.value.ndim != 2 or x.value.shape[1] != config.input_dim:
            raise ConfigError(
                f"mlp expects (batch, {config.input_dim}) inputs, got {x.value.shape}"
            )
        h = x
        for i in range(config.depth):
            name = f"dense{i}"
            h = g.add(g.matmul(h, g.param(f"{name}.weight"), name), g.param(f"{name}.bias"), f"{name}.bias")
            h = getattr(g, act)(h, label=f"{name}.{act}")
            h = _apply_site(g, h, f"site.{name}", plan)
        logits = g.add(g.matmul(h, g.param("head.weight"), "head"), g.param("head.bias"), "head.bias")
        return _loss_node(g, logits, batch, objective)

    return forward


def _transformer_forward(config, objective, plan):
    def forward(g: GraphBuilder, batch):
        ids = np.asarray(batch.inputs, dtype=np.int64)
        if ids.ndim != 2 or ids.shape[1] > config.max_seq_len:
            raise ConfigError(
                f"transformer expects (batch, seq<={config.max_seq_len}) token ids, got {ids.shape}"
            )
        t = ids.shape[1]
        tok = g.embedding(g.param("tok_embed.table"), ids, "tok_embed")
        pos = g.embedding(g.param("pos_embed.table"), np.arange(t), "pos_embed")
        x = g.add(tok, pos, "embed.add")
        for i in range(config.depth):
            attn = f"block{i}.attn"
            a = g.attention(
                x,
                g.param(f"{attn}.wq"), g.param(f"{attn}.wk"),
                g.param(f"{attn}.wv"), g.param(f"{attn}.wo"),
                g.param(f"{attn}.bq"), g.param(f"{attn}.bk"),
                g.param(f"{attn}.bv"), g.param(f"{attn}.bo"),
                heads=config.heads, label=attn,
            )
            a = _apply_site(g, a, f"site.{attn}", plan)
            norm1 = f"block{i}.norm1"
            x = g.layer_norm(
                g.add(x, a, f"block{i}.residual1"),
                g.param(f"{norm1}.scale"), g.param(f"{norm1}.shift"), label=norm1,
            )
            ffn = f"block{i}.ffn"
            b, tt, d = x.value.shape
            h = g.reshape(x, (b * tt, d), f"{ffn}.in")
            h = g.add(g.matmul(h, g.param(f"{ffn}.w1"), f"{ffn}.w1"), g.param(f"{ffn}.b1"), f"{ffn}.b1")
            h = g.gelu(h, label=f"{ffn}.gelu")
            h = g.add(g.matmul(h, g.param(f"{ffn}.w2"), f"{ffn}.w2"), g.param(f"{ffn}.b2"), f"{ffn}.b2")
            h = g.reshape(h, (b, tt, d), f"{ffn}.out")
            h = _apply_site(g, h, f"site.{ffn}", plan)
            norm2 = f"block{i}.norm2"
            x = g.layer_norm(
                g.add(x, h, f"block{i}.residual2"),
                g.param(f"{norm2}.scale"), g.param(f"{norm2}.shift"), label=norm2,
            )
        pooled = g.mean_pool(x, axis=1, label="pool")
        logits = g.add(g.matmul(pooled, g.param("head.weight"), "head"), g.param("head.bias"), "head.bias")
        return _loss_node(g, logits, batch, objective)

    return forward


# -- checkpoints ------------------------------------------------------------

CHECKPOINT_KIND = "checkpoint"


def save_checkpoint(model: Model, path, provenance: str = "") -> None:
    meta = {
        "config": model.config.to_dict(),
        "init_seed": model.init_seed,
        "provenance": provenance,
        "param_info": {
            p.id: {"layer_id": p.layer_id, "role": p.role.value} for p in model.params
        },
    }
    save_blocks(path, CHECKPOINT_KIND, meta, {p.id: p.array for p in model.params})


def load_checkpoint(path) -> Model:
    meta, arrays = load_blocks(path, expect_kind=CHECKPOINT_KIND)
    config = ModelConfig.from_dict(meta["config"])
    config.validate()
    params = []
    for pid, layer_id, shape, role, _ in _param_specs(config):
        if pid not in arrays:
            raise ShapeDisagreementError(f"{path}: missing parameter block {pid!r}")
        arr = arrays[pid]
        if tuple(arr.shape) != tuple(shape):
            raise ShapeDisagreementError(
                f"{path}: {pid} stored with shape {list(arr.shape)}, "
                f"config implies {list(shape)}"
            )
        params.append(Parameter(pid, layer_id, Tensor(arr), role))
    extra = set(arrays) - {p.id for p in params}
    if extra:
        raise ShapeDisagreementError(f"{path}: unexpected parameter blocks {sorted(extra)}")
    return Model(config, ParameterSet(params), meta["init_seed"], config.dropout_sites)
