"""Exception hierarchy shared by all modules."""


class EdrdimError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(EdrdimError):
    """A data file could not be parsed (ragged rows, non-numeric fields)."""


class GridError(EdrdimError):
    """Grid points are not strictly increasing or otherwise unusable."""


class ShapeError(EdrdimError):
    """Array dimensions do not agree."""


class DegenerateError(EdrdimError):
    """A quantity that must be positive collapsed to zero (no variance)."""


class RankError(EdrdimError):
    """More components were requested than the data can support."""


class SliceError(EdrdimError):
    """Response slicing is infeasible or produced an invalid partition."""


class DomainError(EdrdimError):
    """Test parameters violate the hypotheses of the limiting distribution."""


class NumericalError(EdrdimError):
    """A numerical routine (SVD, eigensolver) failed to converge."""
