"""Exception types shared across the package.

Each class maps to one CLI diagnostic category (see cli.EXIT_CODES).
"""


class DriftnetError(Exception):
    """Base class for all package errors."""


class ConfigError(DriftnetError, ValueError):
    """Invalid configuration value or inconsistent option combination."""


class DataFormatError(DriftnetError, ValueError):
    """Malformed feature file, manifest, or cache file."""


class TrainingError(DriftnetError, RuntimeError):
    """Numeric failure during readout training (e.g. non-finite loss)."""
