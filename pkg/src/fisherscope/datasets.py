"""Deterministic toy datasets and the restart split protocol.

Three synthetic sources cover the three metric families: parity-in-noise
classification, linear-plus-interaction regression, and character-window
next-character prediction over any text file. A tabular CSV loader covers
externally supplied classification/regression data.
"""

from __future__ import annotations

import csv
import hashlib
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DatasetError
from .seeding import substream

TASK_KINDS = ("classification", "regression", "language_modeling")


def dataset_digest(arrays) -> str:
    """Content hash over a sequence of arrays (shape- and dtype-aware)."""
    h = hashlib.sha256()
    for arr in arrays:
        a = np.ascontiguousarray(arr)
        h.update(str(a.dtype).encode())
        h.update(repr(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


@dataclass
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray
    task_kind: str
    source: str
    seed: int = 0
    vocab: list[str] | None = None
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return self.inputs.shape[0]

    @property
    def n_classes(self) -> int:
        if self.task_kind == "regression":
            raise DatasetError("regression datasets have no class count")
        if self.vocab is not None:
            return len(self.vocab)
        return int(self.targets.max()) + 1

    def digest(self) -> str:
        return dataset_digest([self.inputs, self.targets])

    def chance_floor(self) -> float:
        """Metric value a constant/uninformed predictor would score."""
        if self.task_kind == "classification":
            _, counts = np.unique(self.targets, return_counts=True)
            return float(counts.max() / counts.sum())
        if self.task_kind == "language_modeling":
            return float(np.log(self.n_classes))  # uniform cross-entropy
        return 0.0  # correlation of an uninformed predictor


def synthetic_parity(
    size: int, seed: int, dim: int = 10, parity_bits: int = 3
) -> Dataset:
    """+-1 inputs where the label is the parity of the first ``parity_bits``
    coordinates; the remaining coordinates are distractor noise."""
    if not 0 < parity_bits <= dim:
        raise DatasetError("parity_bits must be in [1, dim]")
    rng = substream(seed, "parity")
    x = rng.choice([-1.0, 1.0], size=(size, dim))
    y = (np.prod(x[:, :parity_bits], axis=1) > 0).astype(np.int64)
    return Dataset(
        x, y, "classification", f"synthetic_parity(dim={dim},k={parity_bits})", seed
    )


def synthetic_regression(
    size: int, seed: int, dim: int = 8, noise: float = 0.05
) -> Dataset:
    """Targets: fixed linear form plus one pairwise interaction plus noise."""
    rng = substream(seed, "regression")
    x = rng.normal(size=(size, dim))
    w = substream(seed, "regression-coefs").normal(size=dim)
    y = x @ w + 0.5 * x[:, 0] * x[:, 1] + noise * rng.normal(size=size)
    return Dataset(
        x, y.reshape(-1, 1), "regression", f"synthetic_regression(dim={dim})", seed
    )


def synthetic_text(n_chars: int, seed: int) -> str:
    """Structured pseudo-text from a seeded first-order character chain.

    Gives corpora with real statistical structure (so information estimates
    have something to latch onto) without shipping a text file.
    """
    rng = substream(seed, "text")
    alphabet = list("etaoinshr dlu.")
    k = len(alphabet)
    # sparse, peaked transition table: each character strongly prefers a few
    # successors, which yields learnable bigram structure
    trans = rng.random((k, k)) ** 4
    trans /= trans.sum(axis=1, keepdims=True)
    out = np.empty(n_chars, dtype=np.int64)
    state = int(rng.integers(k))
    for i in range(n_chars):
        state = int(rng.choice(k, p=trans[state]))
        out[i] = state
    return "".join(alphabet[i] for i in out)


def char_corpus(path, window: int, max_windows: int | None = None, seed: int = 0) -> Dataset:
    """Sliding next-character windows over a text file.

    A file of N characters yields N - window examples; each input is the
    window's character ids and the target is the id of the next character.
    """
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise DatasetError(f"cannot read corpus file {path}: {e}") from e
    if len(text) <= window:
        raise DatasetError(
            f"corpus {path} has {len(text)} chars; need more than window={window}"
        )
    vocab = sorted(set(text))
    index = {c: i for i, c in enumerate(vocab)}
    ids = np.array([index[c] for c in text], dtype=np.int64)
    n = len(text) - window
    inputs = np.stack([ids[i : i + window] for i in range(n)])
    targets = ids[window : window + n]
    if max_windows is not None and n > max_windows:
        keep = np.sort(substream(seed, "corpus-subset").choice(n, size=max_windows, replace=False))
        inputs, targets = inputs[keep], targets[keep]
    return Dataset(
        inputs, targets, "language_modeling",
        f"char_corpus({os.path.basename(path)},window={window})", seed, vocab=vocab,
    )


def tabular_csv(path, label_column: str, task_kind: str) -> Dataset:
    if task_kind not in ("classification", "regression"):
        raise DatasetError(f"tabular task_kind must be classification or regression, got {task_kind!r}")
    path = os.fspath(path)
    try:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None or label_column not in reader.fieldnames:
                raise DatasetError(
                    f"{path}: label column {label_column!r} not found "
                    f"(columns: {reader.fieldnames})"
                )
            feature_cols = [c for c in reader.fieldnames if c != label_column]
            rows, labels = [], []
            for row in reader:
                rows.append([float(row[c]) for c in feature_cols])
                labels.append(row[label_column])
    except OSError as e:
        raise DatasetError(f"cannot read {path}: {e}") from e
    except ValueError as e:
        raise DatasetError(f"{path}: non-numeric feature value ({e})") from e
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    x = np.asarray(rows)
    if task_kind == "classification":
        classes = sorted(set(labels))
        y = np.array([classes.index(v) for v in labels], dtype=np.int64)
        extra = {"classes": classes}
    else:
        try:
            y = np.array([float(v) for v in labels]).reshape(-1, 1)
        except ValueError as e:
            raise DatasetError(f"{path}: non-numeric regression label ({e})") from e
        extra = {}
    return Dataset(x, y, task_kind, f"tabular_csv({os.path.basename(path)})", 0, extra=extra)


def _count(total: int, fraction: float) -> int:
    return int(np.floor(total * fraction + 0.5))


def split(
    dataset: Dataset,
    restart_seed: int,
    train_fraction: float = 0.8,
    paucity_fraction: float = 1.0,
) -> tuple[Dataset, Dataset]:
    """Shuffle by restart seed, split train|dev, then cut the train side.

    The dev side never shrinks with paucity, so metric comparisons across
    paucity levels share an evaluation set per restart.
    """
    if not 0.0 < train_fraction < 1.0:
        raise DatasetError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if not 0.0 < paucity_fraction <= 1.0:
        raise DatasetError(f"paucity_fraction must be in (0, 1], got {paucity_fraction}")
    n = len(dataset)
    perm = substream(restart_seed, "split").permutation(n)
    n_train = _count(n, train_fraction)
    train_idx = perm[:n_train]
    dev_idx = perm[n_train:]
    n_keep = max(_count(n_train, paucity_fraction), 0)
    train_idx = train_idx[:n_keep]
    if train_idx.size == 0 or dev_idx.size == 0:
        raise DatasetError(
            f"split of {n} samples leaves an empty side "
            f"(train {train_idx.size}, dev {dev_idx.size})"
        )

    def subset(idx, tag):
        return Dataset(
            dataset.inputs[idx], dataset.targets[idx], dataset.task_kind,
            f"{dataset.source}/{tag}", dataset.seed, dataset.vocab, dict(dataset.extra),
        )

    return subset(train_idx, "train"), subset(dev_idx, "dev")
