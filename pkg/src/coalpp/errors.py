"""Exception types raised across the package."""


class CoalppError(ValueError):
    """Base class for all parameter and domain errors."""


class InvalidParameter(CoalppError):
    pass


class InvalidRect(CoalppError):
    pass


class NotDisjoint(CoalppError):
    """Raised when two members of a rectangle union overlap.

    The offending pair is kept on ``indices`` so callers can report it.
    """

    def __init__(self, i: int, j: int, message: str | None = None):
        self.indices = (i, j)
        super().__init__(message or f"rectangles {i} and {j} overlap")


class OutOfWindow(CoalppError):
    pass


class ScaleLimit(CoalppError):
    pass


class OracleRange(CoalppError):
    pass
