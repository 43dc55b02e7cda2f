"""Exception hierarchy for qusynth."""


class QusynthError(Exception):
    """Base class for all qusynth failures."""
    exit_code = 1


class ValidationError(QusynthError, ValueError):
    """Input rejected before any computation ran."""
    exit_code = 2


class NotUnitaryError(ValidationError):
    pass


class NotHermitianError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class ToleranceError(QusynthError, ArithmeticError):
    """A numerical acceptance check failed."""
    exit_code = 3


class IntegrationError(ToleranceError):
    pass


class DecompositionError(ToleranceError):
    pass
