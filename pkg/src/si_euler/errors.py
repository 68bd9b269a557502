"""Exception hierarchy; each class carries the CLI exit code of its category."""


class SIEulerError(Exception):
    exit_code = 2


class ConfigError(SIEulerError, ValueError):
    exit_code = 1


class NumericalError(SIEulerError):
    exit_code = 2


class MarkerCrossingError(NumericalError):
    """Characteristics crossed; exact transport never does this, so the run is invalid."""


class JumpMergerError(NumericalError):
    """Two breakpoints of a jump profile collided."""


class NoSteadyStateError(NumericalError):
    pass


class ResolutionExhausted(SIEulerError):
    exit_code = 3
