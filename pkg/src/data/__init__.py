"""Episodes, action chunks, dataset persistence and batch sampling."""

from src.data.models import Step, Episode, ChunkSample, OfflineDataset
from src.data.chunks import make_chunks, mc_return_to_go, ChunkBatch
from src.data.storage import save_dataset, load_dataset, FORMAT_VERSION
from src.data.sampling import sample_indices, sample_batch, sample_chunk_batch

__all__ = [
    'Step', 'Episode', 'ChunkSample', 'OfflineDataset',
    'make_chunks', 'mc_return_to_go', 'ChunkBatch',
    'save_dataset', 'load_dataset', 'FORMAT_VERSION',
    'sample_indices', 'sample_batch', 'sample_chunk_batch',
]
