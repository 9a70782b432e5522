"""Reverse-mode automatic differentiation on a flat tape.

A forward pass builds nodes eagerly (values computed immediately, with a
finiteness check per op); the tape is replayed in reverse by
:func:`backward`.  Models are expressed as forward callables of signature
``forward(g: GraphBuilder, batch: Batch) -> Node`` returning a scalar loss
node, so the same description drives evaluation, exact gradients, and the
finite-difference oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import (
    FisherscopeError,
    NonFiniteError,
    ShapeMismatchError,
    StaleActivationError,
)
from .seeding import substream
from .tensor import GradientRecord, ParameterSet

MODES = ("train", "eval")


@dataclass
class Batch:
    """One evaluation batch: inputs plus aligned targets."""

    inputs: np.ndarray
    targets: np.ndarray

    def __len__(self):
        return len(self.inputs)

    def take(self, i: int) -> "Batch":
        return Batch(self.inputs[i : i + 1], self.targets[i : i + 1])


class Node:
    __slots__ = ("value", "grad_fn", "label", "grad")

    def __init__(self, value, grad_fn=None, label=""):
        self.value = value
        self.grad_fn = grad_fn
        self.label = label
        self.grad = None


def _acc(node: Node, g: np.ndarray):
    if node.grad is None:
        node.grad = np.array(g, dtype=np.float64)
    else:
        node.grad = node.grad + g


class GraphBuilder:
    """Op namespace bound to one forward evaluation (one tape)."""

    def __init__(self, params: ParameterSet, mode: str = "eval", rng_seed=None):
        if mode not in MODES:
            raise FisherscopeError(f"mode must be one of {MODES}, got {mode!r}")
        self.params = params
        self.mode = mode
        self.rng_seed = rng_seed
        self.tape: list[Node] = []
        self.param_nodes: dict[str, Node] = {}

    # -- plumbing ---------------------------------------------------------

    def _emit(self, value, grad_fn, label) -> Node:
        value = np.asarray(value, dtype=np.float64)
        self._check_finite(value, label)
        node = Node(value, grad_fn, label)
        self.tape.append(node)
        return node

    @staticmethod
    def _check_finite(value, label):
        # One cheap reduction; the elementwise scan runs only on suspicion.
        total = value.sum() if value.size else 0.0
        if np.isfinite(total):
            return
        bad = ~np.isfinite(value)
        if not bad.any():
            return
        batch_index = int(np.argwhere(bad)[0][0]) if value.ndim >= 1 else None
        raise NonFiniteError(label, batch_index)

    def param(self, pid: str) -> Node:
        if pid not in self.param_nodes:
            p = self.params.get(pid)
            node = Node(p.array, None, pid)
            self.tape.append(node)
            self.param_nodes[pid] = node
        return self.param_nodes[pid]

    def constant(self, values) -> Node:
        node = Node(np.asarray(values), None, "const")
        self.tape.append(node)
        return node

    def site_rng(self, site_id: str) -> np.random.Generator:
        if self.rng_seed is None:
            raise FisherscopeError(
                f"train-mode forward with stochastic site {site_id!r} needs rng_seed"
            )
        return substream(self.rng_seed, "site", site_id)

    # -- ops ---------------------------------------------------------------

    def matmul(self, a: Node, b: Node, label="matmul") -> Node:
        av, bv = a.value, b.value
        if av.ndim < 2 or bv.ndim < 2:
            raise ShapeMismatchError("matmul operands must be at least 2-D", label)
        if av.shape[-1] != bv.shape[-2]:
            raise ShapeMismatchError(
                f"inner dimensions disagree: {av.shape} @ {bv.shape}", label
            )
        if av.ndim != bv.ndim and bv.ndim != 2:
            raise ShapeMismatchError(
                f"batched matmul needs matching batch dims: {av.shape} @ {bv.shape}",
                label,
            )
        if av.ndim == bv.ndim and av.ndim > 2 and av.shape[:-2] != bv.shape[:-2]:
            raise ShapeMismatchError(
                f"batch dims disagree: {av.shape} @ {bv.shape}", label
            )
        value = av @ bv

        def grad_fn(gy):
            _acc(a, gy @ np.swapaxes(bv, -1, -2))
            gb = np.swapaxes(av, -1, -2) @ gy
            if bv.ndim == 2 and gb.ndim > 2:
                gb = gb.sum(axis=tuple(range(gb.ndim - 2)))
            _acc(b, gb)

        return self._emit(value, grad_fn, label)

    def add(self, a: Node, b: Node, label="add") -> Node:
        av, bv = a.value, b.value
        if av.shape != bv.shape and (
            bv.ndim > av.ndim or av.shape[av.ndim - bv.ndim :] != bv.shape
        ):
            raise ShapeMismatchError(f"cannot add {bv.shape} onto {av.shape}", label)
        value = av + bv

        def grad_fn(gy):
            _acc(a, gy)
            gb = gy
            if bv.shape != av.shape:
                gb = gy.sum(axis=tuple(range(av.ndim - bv.ndim)))
            _acc(b, gb)

        return self._emit(value, grad_fn, label)

    def mul(self, a: Node, b: Node, label="mul") -> Node:
        if a.value.shape != b.value.shape:
            raise ShapeMismatchError(
                f"elementwise mul needs equal shapes: {a.value.shape} vs {b.value.shape}",
                label,
            )
        value = a.value * b.value

        def grad_fn(gy):
            _acc(a, gy * b.value)
            _acc(b, gy * a.value)

        return self._emit(value, grad_fn, label)

    def mul_mask(self, a: Node, mask: np.ndarray, label="mask") -> Node:
        """Multiply by a fixed (non-differentiable) array, e.g. a dropout mask."""
        mask = np.asarray(mask, dtype=np.float64)
        if mask.shape != a.value.shape:
            raise ShapeMismatchError(
                f"mask shape {mask.shape} does not match input {a.value.shape}", label
            )
        value = a.value * mask

        def grad_fn(gy):
            _acc(a, gy * mask)

        return self._emit(value, grad_fn, label)

    def scale(self, a: Node, c: float, label="scale") -> Node:
        value = a.value * c

        def grad_fn(gy):
            _acc(a, gy * c)

        return self._emit(value, grad_fn, label)

    def relu(self, a: Node, label="relu") -> Node:
        value = K.relu_fwd(a.value)

        def grad_fn(gy):
            _acc(a, K.relu_bwd(a.value, gy))

        return self._emit(value, grad_fn, label)

    def gelu(self, a: Node, label="gelu") -> Node:
        value = K.gelu_fwd(a.value)

        def grad_fn(gy):
            _acc(a, K.gelu_bwd(a.value, gy))

        return self._emit(value, grad_fn, label)

    def unary(self, a: Node, fn, dfn, label="unary") -> Node:
        """Custom elementwise op given the function and its derivative."""
        value = fn(a.value)

        def grad_fn(gy):
            _acc(a, gy * dfn(a.value))

        return self._emit(value, grad_fn, label)

    def softmax(self, a: Node, label="softmax") -> Node:
        """Softmax along the last axis."""
        shape = a.value.shape
        rows = a.value.reshape(-1, shape[-1])
        p = K.softmax_rows(rows).reshape(shape)

        def grad_fn(gy):
            p2 = p.reshape(-1, shape[-1])
            g2 = np.ascontiguousarray(gy.reshape(-1, shape[-1]))
            _acc(a, K.softmax_rows_bwd(p2, g2).reshape(shape))

        return self._emit(p, grad_fn, label)

    def layer_norm(self, a: Node, gamma: Node, beta: Node, eps=1e-5, label="layer_norm") -> Node:
        shape = a.value.shape
        if gamma.value.shape != (shape[-1],) or beta.value.shape != (shape[-1],):
            raise ShapeMismatchError(
                f"norm scale/shift must have shape ({shape[-1]},)", label
            )
        rows = a.value.reshape(-1, shape[-1])
        y, mean, rstd = K.layernorm_rows_fwd(rows, gamma.value, beta.value, eps)

        def grad_fn(gy):
            g2 = np.ascontiguousarray(gy.reshape(-1, shape[-1]))
            gx, dgamma, dbeta = K.layernorm_rows_bwd(
                rows, gamma.value, mean, rstd, g2
            )
            _acc(a, gx.reshape(shape))
            _acc(gamma, dgamma)
            _acc(beta, dbeta)

        return self._emit(y.reshape(shape), grad_fn, label)

    def embedding(self, table: Node, ids, label="embedding") -> Node:
        ids = np.asarray(ids, dtype=np.int64)
        if ids.min(initial=0) < 0 or ids.max(initial=0) >= table.value.shape[0]:
            raise ShapeMismatchError(
                f"token id out of range for table of {table.value.shape[0]} rows", label
            )
        value = table.value[ids]

        def grad_fn(gy):
            g = np.zeros_like(table.value)
            np.add.at(g, ids, gy)
            _acc(table, g)

        return self._emit(value, grad_fn, label)

    def reshape(self, a: Node, shape, label="reshape") -> Node:
        value = a.value.reshape(shape)

        def grad_fn(gy):
            _acc(a, gy.reshape(a.value.shape))

        return self._emit(value, grad_fn, label)

    def transpose(self, a: Node, axes, label="transpose") -> Node:
        axes = tuple(axes)
        value = np.ascontiguousarray(np.transpose(a.value, axes))
        inverse = tuple(np.argsort(axes))

        def grad_fn(gy):
            _acc(a, np.transpose(gy, inverse))

        return self._emit(value, grad_fn, label)

    def mean_pool(self, a: Node, axis=1, label="mean_pool") -> Node:
        n = a.value.shape[axis]
        value = a.value.mean(axis=axis)

        def grad_fn(gy):
            _acc(a, np.expand_dims(gy, axis).repeat(n, axis=axis) / n)

        return self._emit(value, grad_fn, label)

    def sum_all(self, a: Node, label="sum") -> Node:
        value = a.value.sum()

        def grad_fn(gy):
            _acc(a, np.full_like(a.value, float(gy)))

        return self._emit(value, grad_fn, label)

    def attention(self, x: Node, wq, wk, wv, wo, bq, bk, bv_, bo, heads: int, label="attention") -> Node:
        """Scaled dot-product self-attention over (batch, seq, dim) input."""
        b, t, d = x.value.shape
        if d % heads != 0:
            raise ShapeMismatchError(f"width {d} not divisible by {heads} heads", label)
        dh = d // heads

        def proj(w, bias, tag):
            flat = self.reshape(x, (b * t, d), label=f"{label}.{tag}.in")
            y = self.add(self.matmul(flat, w, f"{label}.{tag}"), bias, f"{label}.{tag}.bias")
            y = self.reshape(y, (b, t, heads, dh), label=f"{label}.{tag}.split")
            return self.transpose(y, (0, 2, 1, 3), label=f"{label}.{tag}.heads")

        q = proj(wq, bq, "q")
        k = proj(wk, bk, "k")
        v = proj(wv, bv_, "v")
        kt = self.transpose(k, (0, 1, 3, 2), label=f"{label}.kT")
        scores = self.scale(self.matmul(q, kt, f"{label}.scores"), 1.0 / np.sqrt(dh))
        attn = self.softmax(scores, label=f"{label}.softmax")
        ctx = self.matmul(attn, v, f"{label}.context")
        ctx = self.transpose(ctx, (0, 2, 1, 3), label=f"{label}.merge")
        ctx = self.reshape(ctx, (b * t, d), label=f"{label}.flat")
        out = self.add(self.matmul(ctx, wo, f"{label}.out"), bo, f"{label}.out.bias")
        return self.reshape(out, (b, t, d), label=f"{label}.outshape")

    def cross_entropy(self, logits: Node, labels, label="cross_entropy") -> Node:
        """Mean negative log-likelihood of integer labels under softmax logits."""
        labels = np.asarray(labels, dtype=np.int64)
        lv = logits.value
        if lv.ndim != 2 or labels.shape != (lv.shape[0],):
            raise ShapeMismatchError(
                f"expected (batch, classes) logits and (batch,) labels, got {lv.shape} and {labels.shape}",
                label,
            )
        n = lv.shape[0]
        lse = K.logsumexp_rows(lv)
        picked = lv[np.arange(n), labels]
        value = np.mean(lse - picked)

        def grad_fn(gy):
            p = K.softmax_rows(lv)
            p[np.arange(n), labels] -= 1.0
            _acc(logits, p * (float(gy) / n))

        return self._emit(value, grad_fn, label)

    def mse(self, pred: Node, target, label="mse") -> Node:
        """Half squared error per sample (unit-variance Gaussian NLL), batch mean."""
        target = np.asarray(target, dtype=np.float64)
        if pred.value.shape != target.shape:
            raise ShapeMismatchError(
                f"prediction shape {pred.value.shape} vs target {target.shape}", label
            )
        n = pred.value.shape[0]
        diff = pred.value - target
        value = 0.5 * np.sum(diff * diff) / n

        def grad_fn(gy):
            _acc(pred, diff * (float(gy) / n))

        return self._emit(value, grad_fn, label)


class ActivationRecord:
    """Everything needed to run backward for one forward evaluation."""

    def __init__(self, builder: GraphBuilder, loss: Node):
        self.builder = builder
        self.loss = loss
        self._version = builder.params.version

    def stale(self) -> bool:
        return self.builder.params.version != self._version


def evaluate_graph(model_forward, batch: Batch, params: ParameterSet, mode="eval", rng_seed=None):
    """Run one forward pass; returns (scalar loss, activation record)."""
    g = GraphBuilder(params, mode=mode, rng_seed=rng_seed)
    loss = model_forward(g, batch)
    if np.asarray(loss.value).ndim != 0:
        raise FisherscopeError("model forward must return a scalar loss node")
    return float(loss.value), ActivationRecord(g, loss)


def backward(record: ActivationRecord) -> GradientRecord:
    """Exact reverse-mode gradients of the recorded loss w.r.t. all parameters."""
    if record.stale():
        raise StaleActivationError(
            "parameters were mutated after the forward pass; re-run evaluate_graph"
        )
    for node in record.builder.tape:
        node.grad = None
    record.loss.grad = np.asarray(1.0)
    for node in reversed(record.builder.tape):
        if node.grad is not None and node.grad_fn is not None:
            node.grad_fn(node.grad)
    grads = {}
    for pid, node in record.builder.param_nodes.items():
        if node.grad is None:
            grads[pid] = np.zeros_like(node.value)
        else:
            grads[pid] = np.asarray(node.grad, dtype=np.float64).reshape(node.value.shape)
    for p in record.builder.params:
        grads.setdefault(p.id, np.zeros_like(p.array))
    return GradientRecord(loss=float(record.loss.value), grads=grads)


def per_sample_gradients(model_forward, batch: Batch, params: ParameterSet, rng_seed=None):
    """One GradientRecord per sample (eval mode; Fisher-style score vectors)."""
    if len(batch) == 0:
        raise FisherscopeError("per-sample gradients need a nonempty batch")
    records = []
    for i in range(len(batch)):
        _, rec = evaluate_graph(model_forward, batch.take(i), params, mode="eval", rng_seed=rng_seed)
        records.append(backward(rec))
    return records


def finite_difference_gradient(model_forward, batch: Batch, params: ParameterSet, step=1e-5, mode="eval", rng_seed=None) -> GradientRecord:
    """Central-difference gradient oracle; O(total parameter count) forwards."""
    if step <= 0:
        raise FisherscopeError("finite-difference step must be positive")
    base_loss, _ = evaluate_graph(model_forward, batch, params, mode=mode, rng_seed=rng_seed)
    work = params.copy()
    grads = {}
    for p in params:
        base = p.array
        flat = base.reshape(-1)
        g = np.zeros(base.size)
        for j in range(base.size):
            bumped = flat.copy()
            bumped[j] = flat[j] + step
            work.replace(p.id, bumped.reshape(base.shape))
            up, _ = evaluate_graph(model_forward, batch, work, mode=mode, rng_seed=rng_seed)
            bumped[j] = flat[j] - step
            work.replace(p.id, bumped.reshape(base.shape))
            down, _ = evaluate_graph(model_forward, batch, work, mode=mode, rng_seed=rng_seed)
            g[j] = (up - down) / (2.0 * step)
        work.replace(p.id, base)
        grads[p.id] = g.reshape(base.shape)
    return GradientRecord(loss=base_loss, grads=grads)
