"""Exception hierarchy shared by all firelite modules."""


class FireliteError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(FireliteError):
    """Tensor shapes or dimensions are inconsistent with an operation."""


class DataError(FireliteError):
    """Tensor payload is invalid (wrong length, non-finite values)."""


class ConfigError(FireliteError):
    """Unsupported or inconsistent configuration value."""


class DecodeError(FireliteError):
    """Encoded image bytes could not be decoded."""


class DatasetLayoutError(FireliteError):
    """Dataset directory does not follow the expected class layout."""


class DomainError(FireliteError):
    """Value outside the domain of an operation (bad class index, empty matrix)."""


class WeightError(FireliteError):
    """Weight tensors do not satisfy what the model graph requires."""


class WeightStoreError(WeightError):
    """Base class for problems with an FLW1 container itself."""


class StoreFormatError(WeightStoreError):
    """Structurally malformed FLW1 data (bad magic, bad lengths, duplicates)."""


class StoreVersionError(WeightStoreError):
    """FLW1 container declares an unsupported version."""


class StoreCorruptionError(WeightStoreError):
    """FLW1 checksum does not match the container contents."""


class StoreTruncationError(WeightStoreError):
    """FLW1 data ends before the declared structure is complete."""
