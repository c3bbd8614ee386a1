"""Error taxonomy shared by the engines and mapped to CLI exit codes."""


class MinwageError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(MinwageError):
    """Invalid parameters, overrides or configuration files."""

    exit_code = 2


class SolverError(MinwageError):
    """A numerical solver failed to converge or found no bracket.

    Parameters
    ----------
    message : str
        Human readable description.
    trace : dict, optional
        Last iterate, residual norms and any other diagnostics.
    """

    exit_code = 3

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = dict(trace or {})


class DataError(MinwageError):
    """Malformed or incomplete input data."""

    exit_code = 4


class InfeasiblePolicy(MinwageError):
    """The budget cannot close or consumption is non-positive."""

    exit_code = 5

    def __init__(self, message, reason="infeasible"):
        super().__init__(message)
        self.reason = reason


class DomainError(MinwageError, ValueError):
    """A primitive was evaluated outside its domain."""

    exit_code = 3
