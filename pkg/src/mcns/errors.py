"""Exception types shared across the package."""


class RepresentationError(ValueError):
    """Operation received a field in the wrong representation."""


class MultiplierError(ArithmeticError):
    """A Fourier multiplier evaluated to a non-finite value at some wavenumber."""


class ZeroMassError(ValueError):
    """Inverse-Laplacian operator applied to data with nonzero total mass."""


class TruncationDomainError(ValueError):
    """Moment quadrature rejected: integrand does not decay at the box boundary."""


class UnsupportedOrderError(ValueError):
    """Multi-index order outside the range supported by this artifact."""


class DivergenceError(RuntimeError):
    """Time integration produced NaN/Inf or exceeded the blow-up threshold."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class DataError(ValueError):
    """Invalid data fed to a fitting routine (e.g. nonpositive norms)."""


class SnapshotFormatError(ValueError):
    """Field snapshot file is malformed."""


class ConfigError(ValueError):
    """Experiment configuration is malformed or inconsistent."""
