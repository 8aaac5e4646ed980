from typing import Optional


class GridTopError(Exception):
    """Base class for every error raised by the gridtop packages."""


# Network structure

class InvalidNetwork(GridTopError, ValueError):
    """A LayeredNetwork violates the layered-forest invariants."""


class NonConsecutiveLayers(GridTopError, ValueError):
    pass


class OrphanChild(GridTopError, ValueError):
    pass


class EmptyParentSet(GridTopError, ValueError):
    pass


class MalformedColumn(GridTopError, ValueError):
    pass


class NodeSetMismatch(GridTopError, ValueError):
    pass


# Simulation

class MissingChildRow(GridTopError, ValueError):
    pass


class NonPositiveDistance(GridTopError, ValueError):
    pass


class InfeasibleLoadSpec(GridTopError, ValueError):
    pass


class InvalidNoiseConfig(GridTopError, ValueError):
    pass


# Estimation and PCA

class SingularCovariance(GridTopError, ValueError):
    pass


class NegativeVariance(GridTopError, ValueError):
    pass


class EmptyPartition(GridTopError, ValueError):
    pass


class InsufficientSamples(GridTopError, ValueError):
    pass


class SingularDependentBlock(GridTopError, ValueError):
    pass


class LayerPairError(GridTopError):
    """Identification of one layer pair failed."""

    def __init__(self, parent_level: int, cause: Exception):
        super().__init__(f"Layer pair {parent_level}->{parent_level - 1} failed: {cause}")
        self.parent_level = parent_level
        self.cause = cause


# Input / output

class GridTopIOError(GridTopError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class ParseError(GridTopIOError):
    def __init__(self, path: str, message: str, line: Optional[int] = None):
        location = f"line {line}: " if line is not None else ""
        super().__init__(path, f"{location}{message}")
        self.line = line


class LayerMetadataMissing(GridTopError, ValueError):
    pass
