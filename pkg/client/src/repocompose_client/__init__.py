"""Read-only consumer for packed repocompose datasets."""

__version__ = "0.1.0"

from .reader import (
    DatasetError,
    DatasetHandle,
    PackedRecord,
    iterate,
    open_dataset,
    read_manifest,
    records,
    total_tokens,
)

__all__ = [
    "__version__",
    "DatasetError",
    "DatasetHandle",
    "PackedRecord",
    "iterate",
    "open_dataset",
    "read_manifest",
    "records",
    "total_tokens",
]
