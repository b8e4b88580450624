"""Exception types raised across the package."""


class RbsketchError(Exception):
    """Base class for all package errors."""


class DomainError(RbsketchError):
    """An argument is outside the mathematically admissible range."""


class SingularOperatorError(RbsketchError):
    """A full-order operator could not be factorized or solved accurately.

    For the Helmholtz benchmark this typically means the queried parameter
    sits on (or numerically on) a resonance surface.
    """


class SingularReducedSystemError(RbsketchError):
    """A dense reduced system is numerically singular.

    Carries the estimated reciprocal condition number in ``rcond``.
    """

    def __init__(self, message, rcond=None):
        super().__init__(message)
        self.rcond = rcond


class NormNotInvertibleError(RbsketchError):
    """An inverse-covariance norm was requested for a singular covariance."""


class DegenerateEigenproblemError(RbsketchError):
    """A leading-eigenvector query on a numerically zero matrix."""


class ConfigError(RbsketchError):
    """An experiment configuration is inconsistent or incomplete."""
