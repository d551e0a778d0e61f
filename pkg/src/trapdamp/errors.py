"""Exception hierarchy. Every error carries a short machine-readable ``code``."""


class TrapdampError(Exception):
    code = "ERROR"


class InvalidParameterError(TrapdampError, ValueError):
    code = "INVALID_PARAMETER"


class DomainError(TrapdampError, ValueError):
    """Input lies outside the region where an operation is defined."""

    code = "DOMAIN"


class SingularityError(TrapdampError, ArithmeticError):
    code = "SINGULAR"


class FitError(TrapdampError, RuntimeError):
    """A fit failed; ``best`` holds the best-so-far parameters when available."""

    code = "FIT_FAILED"

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class AnalysisError(TrapdampError, ValueError):
    code = "ANALYSIS"


class CoverageError(TrapdampError, ValueError):
    code = "COVERAGE"


class ConfigError(TrapdampError, ValueError):
    code = "CONFIG"
