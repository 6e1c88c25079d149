"""Exception hierarchy.

Each class carries the CLI exit code used when it escapes a command.
"""


class MarkovCodeError(Exception):
    exit_code = 1


class ValidationError(MarkovCodeError, ValueError):
    """Malformed input: bad probabilities, row sums, shapes, parameters."""

    exit_code = 2


class NonErgodicError(ValidationError):
    """Chain is reducible or periodic; the solvers refuse it."""


class UnsupportedAlphabetError(MarkovCodeError, ValueError):
    exit_code = 3


class SolverError(MarkovCodeError, ArithmeticError):
    exit_code = 4


class SingularSystemError(SolverError):
    """A linear system expected to be nonsingular has (numerically) deficient rank."""


class MultichainPolicyError(SingularSystemError):
    """Policy induces more than one recurrent class; evaluation is undefined."""

    def __init__(self, message, policy=None):
        super().__init__(message)
        self.policy = policy


class SeriesConvergenceError(SolverError):
    pass
