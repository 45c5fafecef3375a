"""Exception types shared across the package."""


class PrefGPError(Exception):
    """Base class for errors raised by this package."""


class DimensionMismatchError(PrefGPError, ValueError):
    """Inputs whose shapes or dimensions are inconsistent."""


class InvalidInputError(PrefGPError, ValueError):
    """A value outside its documented domain (bad name, bad token, bad range)."""


class InvalidQueryError(PrefGPError, ValueError):
    """A preference query that compares an item against itself."""


class NumericalDegeneracyError(PrefGPError, RuntimeError):
    """A Gram matrix that cannot be factorized even after jitter.

    Carries the indices of offending near-duplicate point pairs so the
    caller can report which inputs collided.
    """

    def __init__(self, message: str, duplicate_pairs: list[tuple[int, int]] | None = None):
        super().__init__(message)
        self.duplicate_pairs = duplicate_pairs or []


class FitFailureError(PrefGPError, RuntimeError):
    """Mode search did not converge within the iteration cap.

    Carries the final gradient norm for diagnostics.
    """

    def __init__(self, message: str, grad_norm: float):
        super().__init__(message)
        self.grad_norm = grad_norm
