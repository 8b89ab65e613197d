"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid arguments: dimension mismatch, bad parameters, malformed grammar."""


class DomainError(ValueError):
    """An operation evaluated outside its domain of definition."""


class SolverError(RuntimeError):
    """The descent produced non-finite energies or a degenerate fibering map."""
