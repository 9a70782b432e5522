"""Diagonal Fisher estimation, loss-landscape probes, and guided dropout
schedules for small neural models, with a fine-tuning harness to compare
regularizers under shrinking training sets.
"""

from ._kernels import active_backend
from .autodiff import Batch, evaluate_graph, backward, per_sample_gradients
from .errors import (
    CheckpointError,
    ConfigError,
    CorruptFileError,
    DatasetError,
    FingerprintMismatchError,
    FisherscopeError,
    NonFiniteError,
    ShapeDisagreementError,
    ShapeMismatchError,
    StaleActivationError,
    VersionMismatchError,
)
from .models import Model, ModelConfig, build_model, init_output_head, load_checkpoint, make_forward, save_checkpoint
from .tensor import Parameter, ParameterSet, Role, Tensor

__version__ = "0.1.0"

__all__ = [
    "Batch",
    "CheckpointError",
    "ConfigError",
    "CorruptFileError",
    "DatasetError",
    "FingerprintMismatchError",
    "FisherscopeError",
    "Model",
    "ModelConfig",
    "NonFiniteError",
    "Parameter",
    "ParameterSet",
    "Role",
    "ShapeDisagreementError",
    "ShapeMismatchError",
    "StaleActivationError",
    "Tensor",
    "VersionMismatchError",
    "active_backend",
    "backward",
    "build_model",
    "evaluate_graph",
    "init_output_head",
    "load_checkpoint",
    "make_forward",
    "per_sample_gradients",
    "save_checkpoint",
    "__version__",
]
