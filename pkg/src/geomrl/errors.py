"""Exception types raised across the package."""


class GeomError(ValueError):
    """Base class for all geometric and configuration errors."""


class AntipodalError(GeomError):
    """Two unit quaternions are (numerically) antipodal; log/transport undefined."""


class ZeroNormError(GeomError):
    """A quaternion or vector with (numerically) zero norm cannot be normalized."""


class NotPositiveDefinite(GeomError):
    """A matrix expected to be SPD has a non-positive eigenvalue."""


class BadLength(GeomError):
    """A flat vector does not have a length compatible with the requested layout."""


class KindMismatch(GeomError):
    """Composite points/tangents were built over different factor kinds."""


class DimensionMismatch(GeomError):
    """Policy parameters and features have incompatible shapes."""


class NonFiniteReturn(GeomError):
    """An optimizer received a NaN or infinite return."""


class ConfigError(GeomError):
    """Invalid experiment configuration."""
