"""Exception hierarchy shared by all hyptile modules."""


class HypTileError(Exception):
    """Base class for every error raised by hyptile."""


class InvalidArgument(HypTileError, ValueError):
    pass


class NumericalDomainError(HypTileError, ArithmeticError):
    """A value fell outside the domain of a formula by more than the allowed slack."""


class ResourceLimitError(HypTileError):
    pass


class OutOfAtlasError(HypTileError):
    """A point is not covered by the enumerated part of the tiling."""


class OutOfCoreError(OutOfAtlasError):
    """A point lies in the atlas but outside the core tiles, where truncation is visible."""


class BoundaryTruncationError(HypTileError):
    """A query needs the full neighbourhood of a tile that lies on the atlas rim."""
