"""Exception types shared across the package."""


class MalformedInputError(ValueError):
    """Input data is structurally invalid (wrong shape, non-finite, bad JSON)."""


class SpaceMismatchError(ValueError):
    """Two measures or maps do not live on the same metric space."""


class ResourceLimitError(RuntimeError):
    """A requested construction would exceed a fixed size budget."""


class DisconnectedGraphError(ValueError):
    """A length graph has no finite intrinsic metric."""


class IncompatibleThreadError(ValueError):
    """Measure threads do not satisfy the connecting maps of an inductive system."""
