"""Exception types shared across the package."""


class GridMismatchError(ValueError):
    """Operands live on different grids (or wrong sample count)."""


class SingularOperatorError(ValueError):
    """Operator is singular on the given input (e.g. negative-order |D|^s on a field with mean)."""


class ResolvableRangeError(ValueError):
    """Dyadic block index outside the range the grid can represent."""


class ConstructionError(ValueError):
    """A builder produced an object violating its own contract."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class ValidationError(ValueError):
    """Coefficient or data fields violate a precondition."""


class HorizonError(RuntimeError):
    """No admissible solve horizon on the requested window."""


class StabilityError(RuntimeError):
    """Time-stepping configuration violates a stability cap, or a solve blew up."""


class DivergenceError(RuntimeError):
    """Fixed-point sweeps stopped contracting."""
