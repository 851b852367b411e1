"""Exception hierarchy shared by all modules.

Every error carries the CLI exit code it maps to.
"""


class DecowaveError(Exception):
    exit_code = 1


class DomainError(DecowaveError, ValueError):
    """Argument outside the mathematical domain of an operation."""

    exit_code = 2


class ContractViolation(DecowaveError, ValueError):
    """Mismatched dimensions, wrong basis, or other caller bug."""

    exit_code = 2


class ValidationError(DecowaveError, ValueError):
    exit_code = 2

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ConvergenceError(DecowaveError, RuntimeError):
    exit_code = 3

    def __init__(self, message, best_residual=float("nan")):
        super().__init__(message)
        self.best_residual = best_residual


class PrecisionError(DecowaveError, RuntimeError):
    exit_code = 3

    def __init__(self, message, achieved_bound=float("nan")):
        super().__init__(message)
        self.achieved_bound = achieved_bound


class ImpossibleOutcomeError(DecowaveError, RuntimeError):
    exit_code = 4

    def __init__(self, message, probability=0.0):
        super().__init__(message)
        self.probability = probability
