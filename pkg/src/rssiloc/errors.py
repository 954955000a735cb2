"""Exception hierarchy shared by the library and the CLI."""


class LocalizationError(ValueError):
    """Base class for every error raised by rssiloc."""


class DomainError(LocalizationError):
    """An argument lies outside the domain of the channel model."""


class InsufficientAnchorsError(LocalizationError):
    """Fewer than three anchors were supplied."""


class GeometryError(LocalizationError):
    """Anchor geometry does not determine a unique 2-D position."""


class WeightError(LocalizationError):
    """The weight (covariance) matrix is not usable for a WLS solve."""


class ConfigError(LocalizationError):
    """An experiment config or observations file failed to parse or validate."""
