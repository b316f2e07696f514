"""Exception types shared across the package."""


class CachescopeError(Exception):
    """Base class for all cachescope errors."""


class MalformedLine(CachescopeError):
    """A trace line could not be parsed at all (bad format, wrong fields)."""


class SchemaViolation(CachescopeError):
    """A record parsed but breaks a schema invariant."""


class InvalidConfig(CachescopeError):
    """A workload or run configuration is internally inconsistent."""


class EmptyFederation(CachescopeError):
    """A federation was built from zero node specs."""


class DuplicateNodeId(CachescopeError):
    """Two node specs share a node_id."""


class NoEligibleNode(CachescopeError):
    """No joined node accepts the request's namespace."""


class FileTooLarge(CachescopeError):
    """A file exceeds the capacity of every node that could take it."""


class MixedDays(CachescopeError):
    """Records handed to a single-day operation span multiple UTC days."""


class ZeroWindow(CachescopeError):
    """Moving-average window smaller than 1."""


class EmptyTrain(CachescopeError):
    """Normalizer fit requested on an empty training set."""


class SeriesTooShort(CachescopeError):
    """Input series shorter than the operation requires."""


class NonFiniteInput(CachescopeError):
    """Input series contains NaN or infinity."""


class ShapeMismatch(CachescopeError):
    """Model weights and input dimensions disagree."""


class NoSamples(CachescopeError):
    """Training requested with zero samples."""


class NonFiniteLoss(CachescopeError):
    """Training loss diverged to NaN or infinity."""


class EmptyTest(CachescopeError):
    """Evaluation requested with an empty test set."""


class EmptyInput(CachescopeError):
    """Report requested from an empty summary list."""
