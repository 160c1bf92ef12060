"""Typed errors shared across the package.

Every error carries a short ``category`` string so callers (notably the CLI)
can map failures to exit codes without parsing messages.
"""


class WeightsepError(Exception):
    category = "error"


class ShapeError(WeightsepError, ValueError):
    """Operands have incompatible or invalid dimensions."""

    category = "shape"


class OrientationError(ShapeError):
    """Matrix is oriented the wrong way for the requested operation."""

    category = "orientation"


class SingularMatrixError(WeightsepError, ValueError):
    """Numerically rank-deficient input where full column rank is required."""

    category = "singular"


class NumericError(WeightsepError, ArithmeticError):
    """Non-finite values or failed convergence in a numeric routine."""

    category = "numeric"


class DataError(WeightsepError, ValueError):
    """Invalid labels, classes, or sample content."""

    category = "data"


class FormatError(WeightsepError, ValueError):
    """Malformed file on disk (bad magic, truncation, checksum, version)."""

    category = "format"


class ConfigError(WeightsepError, ValueError):
    """Invalid configuration value or combination."""

    category = "config"
