"""Dense float64 tensors, named parameters, and gradient records."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import FisherscopeError, ShapeMismatchError


class Role(Enum):
    WEIGHT = "weight"
    BIAS = "bias"
    EMBEDDING = "embedding"
    NORM_SCALE = "norm_scale"
    NORM_SHIFT = "norm_shift"


def as_array(values, shape=None) -> np.ndarray:
    """Coerce to a C-contiguous float64 array, rejecting NaN/Inf."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if shape is not None:
        if int(np.prod(shape)) != arr.size:
            raise ShapeMismatchError(
                f"shape {list(shape)} implies {int(np.prod(shape))} values, got {arr.size}"
            )
        arr = arr.reshape(shape)
    if not np.isfinite(arr).all():
        raise FisherscopeError("tensor values must be finite")
    return arr


class Tensor:
    """A shaped row-major float64 array; values are validated finite."""

    __slots__ = ("array",)

    def __init__(self, values, shape=None):
        self.array = as_array(values, shape)

    @property
    def shape(self) -> list[int]:
        return list(self.array.shape)

    @property
    def values(self) -> np.ndarray:
        return self.array.reshape(-1)

    @property
    def size(self) -> int:
        return self.array.size

    def __repr__(self):
        return f"Tensor(shape={self.shape})"


@dataclass
class Parameter:
    """A named model parameter belonging to one architectural layer."""

    id: str
    layer_id: str
    tensor: Tensor
    role: Role

    @property
    def array(self) -> np.ndarray:
        return self.tensor.array


class ParameterSet:
    """Ordered, fingerprintable collection of parameters.

    Iteration order is always ascending by parameter id.  Arrays are kept
    read-only; updates go through :meth:`replace`, which bumps a version
    counter so stale activation records can be detected.
    """

    def __init__(self, parameters):
        by_id = {}
        for p in parameters:
            if p.id in by_id:
                raise FisherscopeError(f"duplicate parameter id {p.id!r}")
            p.array.flags.writeable = False
            by_id[p.id] = p
        self._params = dict(sorted(by_id.items()))
        self.version = 0

    def __iter__(self):
        return iter(self._params.values())

    def __len__(self):
        return len(self._params)

    def __contains__(self, pid):
        return pid in self._params

    def ids(self) -> list[str]:
        return list(self._params.keys())

    def get(self, pid: str) -> Parameter:
        try:
            return self._params[pid]
        except KeyError:
            raise FisherscopeError(f"unknown parameter id {pid!r}") from None

    def replace(self, pid: str, values: np.ndarray) -> None:
        """Swap in a new value array for one parameter (same shape)."""
        old = self.get(pid)
        arr = as_array(values, old.array.shape)
        arr.flags.writeable = False
        old.tensor.array = arr
        self.version += 1

    def replace_many(self, updates: dict[str, np.ndarray]) -> None:
        for pid, values in updates.items():
            self.replace(pid, values)

    def copy(self) -> "ParameterSet":
        return ParameterSet(
            Parameter(p.id, p.layer_id, Tensor(p.array.copy()), p.role) for p in self
        )

    def total_size(self) -> int:
        return sum(p.array.size for p in self)

    def fingerprint(self, extra: bytes = b"") -> str:
        h = hashlib.sha256()
        h.update(extra)
        for p in self:
            h.update(p.id.encode())
            h.update(repr(p.array.shape).encode())
            h.update(p.array.tobytes())
        return h.hexdigest()


@dataclass
class GradientRecord:
    """Per-parameter gradients of a scalar loss, aligned shape-for-shape."""

    loss: float
    grads: dict[str, np.ndarray] = field(default_factory=dict)

    def flat(self) -> np.ndarray:
        """Concatenate gradients in ascending parameter-id order."""
        return np.concatenate([self.grads[k].reshape(-1) for k in sorted(self.grads)])
