"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`ArithDynError`.
The CLI maps :class:`ConfigError` to exit status 2 and :class:`MathDomainError`
to exit status 3.
"""


class ArithDynError(Exception):
    pass


class ConfigError(ArithDynError, ValueError):
    """Malformed user input: map/point strings, config files, ranges."""


class ParseError(ConfigError):
    pass


class MathDomainError(ArithDynError, ValueError):
    """An input violates a mathematical hypothesis of the requested operation."""


class DegreeCapExceeded(MathDomainError):
    pass


class BadReduction(MathDomainError):
    pass


class BadPrime(MathDomainError):
    pass


class CharTooSmall(MathDomainError):
    pass


class ModulusTooLarge(MathDomainError):
    pass


class PeriodicInput(MathDomainError):
    pass


class EmptySystem(MathDomainError):
    pass


class InsufficientData(MathDomainError):
    pass


class HeightOverflow(MathDomainError):
    def __init__(self, message, partial=None, index=None):
        super().__init__(message)
        self.partial = partial
        self.index = index


class FitFailure(MathDomainError):
    def __init__(self, message, indices=None):
        super().__init__(message)
        self.indices = indices


class NoCertificateFound(MathDomainError):
    pass


class InvalidCycleData(MathDomainError):
    pass


class UnsupportedQ(MathDomainError):
    pass


class TorsionInput(MathDomainError):
    pass
