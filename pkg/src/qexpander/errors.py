"""Exception hierarchy.

Every error carries the CLI exit code it maps to, so the command line layer
never needs a lookup table of its own.
"""


class QExpanderError(Exception):
    exit_code = 3


class DimensionMismatch(QExpanderError, ValueError):
    exit_code = 3


class DomainError(QExpanderError, ValueError):
    exit_code = 3


class NegativeBeta(DomainError):
    pass


class InfeasibleKnobs(DomainError):
    pass


class PreconditionViolated(DomainError):
    pass


class UnreachableSyndrome(DomainError):
    pass


class Unsatisfiable(QExpanderError, RuntimeError):
    exit_code = 3


class BudgetExceeded(QExpanderError, RuntimeError):
    exit_code = 4


class SizeOverflow(BudgetExceeded):
    pass


class InvariantViolation(QExpanderError, AssertionError):
    exit_code = 5


class ReplayMismatch(InvariantViolation):
    def __init__(self, condition, step, message=""):
        super().__init__(f"{condition} failed at step {step}: {message}")
        self.condition = condition
        self.step = step
