"""Exception hierarchy.

Validation problems derive from :class:`ValidationError` (CLI exit code 1),
numerical non-convergence from :class:`NoConvergence` (exit code 2) and
resource caps from :class:`ResourceCap` (exit code 3).
"""


class KBratteliError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(KBratteliError, ValueError):
    pass


class NonCommuting(ValidationError):
    def __init__(self, i: int, j: int):
        self.pair = (i, j)
        super().__init__(f"adjacency matrices A_{i + 1} and A_{j + 1} do not commute")


class NegativeOrNonIntegerEntry(ValidationError):
    pass


class SourceVertex(ValidationError):
    pass


class NotStronglyConnected(ValidationError):
    pass


class DeltaOutOfRange(ValidationError):
    pass


class HypothesisViolated(ValidationError):
    """A vertex receives fewer than two edges of some color."""


class DepthMismatch(ValidationError):
    pass


class OutsideHalfPlane(ValidationError):
    """The Dirichlet series diverges at the requested argument."""


class NotSquarePath(ValidationError):
    pass


class EmptyExt1(ValidationError):
    pass


class InvalidPath(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, msg: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"{msg} (line {line}, column {column})")


class SchemaError(ValidationError):
    def __init__(self, field: str, msg: str):
        self.field = field
        super().__init__(f"{field}: {msg}")


class NoConvergence(KBratteliError, ArithmeticError):
    pass


class InconsistentEigenvector(NoConvergence):
    pass


class RefinementFailure(NoConvergence):
    def __init__(self, msg: str, function=None, residual: float = float("nan")):
        self.function = function
        self.residual = residual
        super().__init__(f"{msg} (residual {residual:.3e})")


class ResourceCap(KBratteliError):
    pass


class TooLarge(ResourceCap):
    pass


class Overflow(ResourceCap, OverflowError):
    """Exact path counts no longer fit a signed 64-bit integer."""
