"""Exception types raised across the package."""


class WitnessBoundsError(Exception):
    """Base class for every error raised by this package."""


class NonSquare(WitnessBoundsError, ValueError):
    pass


class NonHermitian(WitnessBoundsError, ValueError):
    pass


class NotPSD(WitnessBoundsError, ValueError):
    pass


class DimensionMismatch(WitnessBoundsError, ValueError):
    pass


class InvalidState(WitnessBoundsError, ValueError):
    pass


class InvalidBipartition(WitnessBoundsError, ValueError):
    pass


class NoConvergence(WitnessBoundsError, RuntimeError):
    pass


class DegenerateWitness(WitnessBoundsError, ValueError):
    """The witness is proportional to the identity, so no scale can be formed."""


class OutOfRange(WitnessBoundsError, ValueError):
    pass


class IncoherentInput(WitnessBoundsError, ValueError):
    """The state has no off-diagonal entry large enough to build a probe from."""


class StepTooLarge(WitnessBoundsError, RuntimeError):
    pass


class IndexOutOfRange(WitnessBoundsError, IndexError):
    pass


class BadCount(WitnessBoundsError, ValueError):
    pass


class SchemaMismatch(WitnessBoundsError, ValueError):
    pass


class CorruptRecord(WitnessBoundsError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ShapeMismatch(WitnessBoundsError, ValueError):
    pass


class ConfigError(WitnessBoundsError, ValueError):
    pass


class InvalidWitness(WitnessBoundsError, ValueError):
    pass
