"""Exception types shared across the package.

Everything raised on purpose derives from ToolkitError so callers (and the
CLI) can distinguish expected failures from genuine bugs.
"""


class ToolkitError(Exception):
    """Base class for all errors raised deliberately by this package."""


class DimensionError(ToolkitError, ValueError):
    """Operands have incompatible shapes. The message names both shapes."""


class FormatError(ToolkitError, ValueError):
    """A file being parsed violates its documented layout.

    Carries enough context (path, line or record number) to locate the
    offending input.
    """

    def __init__(self, message, *, path=None, line=None, record=None):
        parts = []
        if path is not None:
            parts.append(str(path))
        if line is not None:
            parts.append(f"line {line}")
        if record is not None:
            parts.append(f"record {record}")
        prefix = ": ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.path = path
        self.line = line
        self.record = record


class ValidationError(ToolkitError, ValueError):
    """An argument value is outside its documented domain."""


class StateError(ToolkitError, RuntimeError):
    """An operation was called in a state where it is not meaningful."""


class ConsistencyError(ToolkitError, ValueError):
    """Two structures that must agree (e.g. gradient keys vs. trainable
    parameter names) do not."""


class CheckpointError(ToolkitError, ValueError):
    """A checkpoint file cannot be loaded: bad magic, wrong version,
    truncation, or shapes that disagree with the recorded metadata."""


class VariantMismatchError(CheckpointError):
    """Parameters for one model variant were passed to another variant's
    forward pass."""


class TrainingDiverged(ToolkitError, ArithmeticError):
    """Training produced a non-finite loss. Names where it happened."""

    def __init__(self, epoch, instance_index, loss):
        super().__init__(
            f"non-finite loss ({loss!r}) at epoch {epoch}, "
            f"instance {instance_index}; training aborted"
        )
        self.epoch = epoch
        self.instance_index = instance_index
        self.loss = loss
