"""Exception hierarchy shared by all fisherscope modules."""


class FisherscopeError(Exception):
    """Base class for all errors raised by this package."""


class ShapeMismatchError(FisherscopeError):
    """An operation received operands with incompatible shapes."""

    def __init__(self, message, layer=None):
        super().__init__(message if layer is None else f"[{layer}] {message}")
        self.layer = layer


class NonFiniteError(FisherscopeError):
    """A forward evaluation produced a NaN or infinity."""

    def __init__(self, layer, batch_index=None):
        where = f"layer '{layer}'"
        if batch_index is not None:
            where += f", batch index {batch_index}"
        super().__init__(f"non-finite value produced at {where}")
        self.layer = layer
        self.batch_index = batch_index


class StaleActivationError(FisherscopeError):
    """Backward was requested after the parameter set was mutated."""


class ConfigError(FisherscopeError):
    """A model or run configuration violates one of its invariants."""


class CheckpointError(FisherscopeError):
    """Base class for checkpoint and block-file persistence failures."""


class VersionMismatchError(CheckpointError):
    """The file declares a format version this code does not read."""


class CorruptFileError(CheckpointError):
    """The file is truncated or structurally unreadable."""


class ShapeDisagreementError(CheckpointError):
    """Stored arrays disagree with the shapes implied by the embedded config."""


class FingerprintMismatchError(FisherscopeError):
    """Two chained artifacts were produced from different models or data."""


class DatasetError(FisherscopeError):
    """A dataset source is empty, unreadable, or malformed."""
