"""Exception types shared across the package."""


class DnmError(Exception):
    """Base class for all dnmkit errors."""


class ValidationError(DnmError):
    """A model or input violates a structural invariant."""


class CycleError(ValidationError):
    """A directed cycle was found where a DAG is required."""

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cycle detected: " + " -> ".join(self.cycle + self.cycle[:1]))


class ImpossibleEvidenceError(DnmError):
    """The supplied evidence has probability zero under the model."""


class NoSampleMassError(DnmError):
    """Every sampled weight was zero: no mass consistent with evidence."""


class JointSizeError(DnmError):
    """The joint state space exceeds the configured enumeration cap."""


class MissingHistoryError(DnmError):
    """History window contains missing values; the closed-form residual
    decomposition does not apply. Callers should fall back to
    ``grid_search_alpha`` or skip the update."""


class ModelFormatError(DnmError):
    """A model file could not be read: wrong schema version or bad content."""
