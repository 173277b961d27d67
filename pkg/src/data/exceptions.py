from typing import Optional


class DatasetError(Exception):
    """Base class for dataset format and content errors."""

    def __init__(self, message: str, record_index: Optional[int] = None):
        self.record_index = record_index
        if record_index is not None:
            message = f"record {record_index}: {message}"
        super().__init__(message)


class FormatVersionError(DatasetError):
    pass


class DimensionMismatchError(DatasetError):
    pass


class CorruptRecordError(DatasetError):
    pass


class EmptyEpisodeError(DatasetError):
    pass


class EmptyBatchError(DatasetError):
    pass
