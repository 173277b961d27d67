"""Seeded uniform-with-replacement batch sampling."""
from typing import List

import numpy as np

from src.data.chunks import ChunkBatch
from src.data.exceptions import EmptyBatchError
from src.data.models import ChunkSample, OfflineDataset


def sample_indices(n_chunks: int, batch_size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw batch_size chunk indices uniformly with replacement."""
    if batch_size < 1:
        raise EmptyBatchError(f"batch_size must be >= 1, got {batch_size}")
    if n_chunks < 1:
        raise EmptyBatchError("dataset holds no chunks")
    return rng.integers(0, n_chunks, size=batch_size)


def sample_batch(dataset: OfflineDataset, batch_size: int, rng: np.random.Generator) -> List[ChunkSample]:
    """Sample chunks as ChunkSample objects; identical rng state gives an identical batch."""
    chunks = dataset.chunks
    return [chunks[i] for i in sample_indices(len(chunks), batch_size, rng)]


def sample_chunk_batch(dataset: OfflineDataset, batch_size: int, rng: np.random.Generator) -> ChunkBatch:
    """Tensor form of sample_batch: the same indices for the same rng state."""
    batch = dataset.chunk_batch()
    return batch.index(sample_indices(len(batch), batch_size, rng))
