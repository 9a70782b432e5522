import sys

import numpy as np
import pytest

from fisherscope import Batch, ModelConfig, build_model
from fisherscope.seeding import substream


def pytest_terminal_summary(terminalreporter):
    """Echo acceptance verdicts once output capture is out of the way."""
    for name, module in sys.modules.items():
        if name.rsplit(".", 1)[-1] == "test_acceptance":
            lines = getattr(module, "VERDICTS", [])
            if lines:
                terminalreporter.section("acceptance criteria")
                for line in lines:
                    terminalreporter.write_line(line)
            break


def flatten_by_pid(values: dict) -> np.ndarray:
    return np.concatenate([np.asarray(values[k]).ravel() for k in sorted(values)])


def tiny_mlp(seed=0, depth=2, width=5, input_dim=4, output_dim=3, activation="relu"):
    cfg = ModelConfig(kind="mlp", depth=depth, width=width,
                      output_dim=output_dim, input_dim=input_dim,
                      activation=activation)
    return build_model(cfg, init_seed=seed)


def tiny_transformer(seed=0, depth=1, width=8, heads=2, vocab=7, seq=5):
    cfg = ModelConfig(kind="transformer_encoder", depth=depth, width=width,
                      heads=heads, vocab_size=vocab, max_seq_len=seq,
                      output_dim=vocab, activation="gelu")
    return build_model(cfg, init_seed=seed)


def generic_point(model, seed=0, scale=0.05):
    """Nudge every parameter off special values (exact zeros sit on relu kinks)."""
    rng = substream(seed, "jitter")
    model.params.replace_many({
        p.id: p.array + rng.normal(0.0, scale, size=p.array.shape) for p in model.params
    })
    return model


def class_batch(seed, n, dim, classes):
    rng = substream(seed, "test-batch")
    return Batch(rng.normal(size=(n, dim)), rng.integers(0, classes, size=n))


def lm_batch(seed, n, seq, vocab):
    rng = substream(seed, "test-lm")
    return Batch(rng.integers(0, vocab, size=(n, seq)),
                 rng.integers(0, vocab, size=n))


@pytest.fixture
def rng():
    return np.random.default_rng(0)
