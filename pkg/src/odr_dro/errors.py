"""Exception types shared across the package."""


class InputError(ValueError):
    """Raised when numeric input data is malformed (non-finite, wrong kind)."""


class DimensionError(ValueError):
    """Raised when array shapes are inconsistent with an operation's contract."""


class RankError(ValueError):
    """Raised when a matrix is numerically rank-deficient for the requested use."""


class ContractError(RuntimeError):
    """Raised when a caller violates a documented precondition (e.g. passing an
    infeasible solution where a feasible one is required)."""


class SolverError(RuntimeError):
    """Raised when a conic solve does not reach the status the caller requires."""


class BoundUndefined(RuntimeError):
    """Raised when a gap bound is requested outside its domain of validity."""
