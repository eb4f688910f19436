"""Exception hierarchy shared by all modules."""


class LoadSchedError(Exception):
    """Base class for every error raised by this package."""


class NonPositiveParameter(LoadSchedError, ValueError):
    pass


class NonDivisibleDwell(LoadSchedError, ValueError):
    pass


class DimensionMismatch(LoadSchedError, ValueError):
    pass


class LengthMismatch(DimensionMismatch):
    pass


class OutOfRange(LoadSchedError, ValueError):
    pass


class GridMismatch(LoadSchedError, ValueError):
    pass


class NonUniformGrid(LoadSchedError, ValueError):
    pass


class ParseError(LoadSchedError, ValueError):
    pass


class CoverageGap(LoadSchedError, ValueError):
    pass


class InvalidProfile(LoadSchedError, ValueError):
    pass


class EmptySet(LoadSchedError, ValueError):
    pass


class ZeroNormalizer(LoadSchedError, ValueError):
    pass


class ZeroSolarEnergy(LoadSchedError, ValueError):
    pass


class EmptyAdmissibleSet(LoadSchedError, RuntimeError):
    """Internal invariant violation: the hold candidate is always admissible."""


class ConfigError(LoadSchedError, ValueError):
    pass


class IncompatibleScenarios(LoadSchedError, ValueError):
    pass
