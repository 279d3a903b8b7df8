"""Exception and warning types shared across the package."""


class ZlabError(Exception):
    """Base class for all errors raised by zlab."""

    exit_code = 3


class GridSizingError(ZlabError, ValueError):
    exit_code = 2


class DomainMismatchError(ZlabError, ValueError):
    """A field was passed in the wrong domain (physical vs spectral)."""


class ZeroModeError(ZlabError):
    """Too much low-frequency mass for |∇|^{-1} to be well conditioned."""


class ResonanceGuardError(ZlabError):
    """A quadrature node with non-zero mask hit a near-zero resonance."""


class SymbolBoundViolation(ZlabError):
    exit_code = 4

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class SpectralBlowupError(ZlabError):
    """High-band mass exceeded the under-resolution threshold."""


class NoContractionError(ZlabError):
    """The Picard iteration failed to contract."""


class TrajectoryError(ZlabError, ValueError):
    """A trajectory is too short or malformed for the requested operation."""


class ConfigError(ZlabError, ValueError):
    exit_code = 2

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class VerificationFailure(ZlabError):
    exit_code = 4


class UnresolvedBandWarning(UserWarning):
    """Spectral mass outside the resolved dyadic band."""
