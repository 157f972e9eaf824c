"""Exception hierarchy shared by all modules."""


class GaussianError(Exception):
    """Base class for engine errors."""


class InvalidArgument(GaussianError, ValueError):
    pass


class DegenerateMeasurement(GaussianError):
    """Measured quadrature has (numerically) zero variance."""


class LinearizationBreakdown(GaussianError):
    """The U factor of the W/U linearization became singular."""


class DivergenceError(GaussianError):
    pass


class CoverageError(GaussianError):
    """A phase-space grid does not contain the distribution."""


class NumericalFailure(GaussianError):
    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class ConfigError(GaussianError):
    pass
