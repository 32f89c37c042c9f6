"""Exception hierarchy shared by the numerical modules and the CLI."""


class AtomFilterError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(AtomFilterError, ValueError):
    """Invalid or unknown configuration / physical parameter."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class NumericalError(AtomFilterError):
    """A computation did not produce a trustworthy result."""


class NonConvergence(NumericalError):
    pass


class NoPeak(NumericalError):
    pass


class MultiplePeaks(NumericalError):
    pass


class TrackingLost(NumericalError):
    def __init__(self, message, last_good=None):
        self.last_good = last_good
        super().__init__(message)


class InsufficientData(NumericalError):
    pass


class ConvergedElsewhere(NumericalError):
    pass


class PoleOnRealAxis(NumericalError):
    pass


class NormDrift(NumericalError):
    pass


class TranslationOutOfGrid(NumericalError):
    pass


# the pole finder and the ground-state solver share the spelling used by callers
NoConvergence = NonConvergence
