"""Exception taxonomy for the training pipeline."""


class TrainerError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(TrainerError):
    """A configuration value is out of its documented range."""


class DatasetLayoutError(TrainerError):
    """The dataset directory does not have the fire/nonfire class layout."""


class SplitError(TrainerError):
    """The dataset cannot be split as requested (too small, bad fractions)."""


class ExportError(TrainerError):
    """The trained model cannot be serialized to the runtime weight format."""
