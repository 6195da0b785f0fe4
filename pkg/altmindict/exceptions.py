"""Custom exceptions for altmindict.

These exceptions make it clear which numerical or input condition failed,
rather than catching generic Exception everywhere.
"""


class AltMinError(Exception):
    """Base exception for all dictionary-learning operations."""
    pass


class ValidationError(AltMinError):
    """Configuration or flag validation failed (names the offending field)."""
    def __init__(self, field: str, message: str):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


class ConfigurationError(AltMinError):
    """
    Application configuration error.

    Examples:
    - Unknown environment name
    - Unreadable --config file
    """
    pass


class ZeroColumnError(AltMinError):
    """A dictionary column is (numerically) zero and cannot be normalized."""
    def __init__(self, index: int, norm: float = 0.0):
        self.index = index
        self.norm = norm
        super().__init__(f"column {index} has norm {norm:.3e}")


class NotUnitError(AltMinError):
    """A vector that must have unit Euclidean norm does not."""
    def __init__(self, norm: float):
        self.norm = norm
        super().__init__(f"expected a unit vector, got norm {norm!r}")


class ShapeMismatchError(AltMinError):
    """Two operands have incompatible shapes."""
    def __init__(self, expected, actual):
        self.expected = tuple(expected)
        self.actual = tuple(actual)
        super().__init__(f"shape mismatch: expected {self.expected}, got {self.actual}")


class RankDeficientError(AltMinError):
    """
    The coefficient Gram matrix X Xᵀ is numerically singular.

    Signals that the alternation collapsed a coefficient row (an atom is
    used by no sample), so the least-squares update is undefined.
    """
    def __init__(self, sigma_min: float, sigma_max: float):
        self.sigma_min = sigma_min
        self.sigma_max = sigma_max
        super().__init__(
            f"X Xᵀ is rank deficient: sigma_min={sigma_min:.3e}, sigma_max={sigma_max:.3e}"
        )


class NoConvergenceError(AltMinError):
    """An iterative method hit its iteration cap."""
    def __init__(self, iterations: int, detail: str = ''):
        self.iterations = iterations
        message = f"no convergence after {iterations} iterations"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class SingularBlockError(AltMinError):
    """A block (or its Schur complement) is not invertible."""
    def __init__(self, block: str):
        self.block = block
        super().__init__(f"block {block} is singular")


class SupportViolationError(AltMinError):
    """A matrix has a nonzero outside the reference support."""
    def __init__(self, row: int, column: int):
        self.row = row
        self.column = column
        super().__init__(f"entry ({row}, {column}) lies outside the reference support")


class MatrixFormatError(AltMinError):
    """
    A matrix or manifest file could not be parsed.

    Examples:
    - Missing "rows cols" header
    - Row count or width disagrees with the header
    - Non-finite entries
    """
    def __init__(self, path, reason: str):
        self.path = str(path)
        self.reason = reason
        super().__init__(f"{self.path}: {reason}")
