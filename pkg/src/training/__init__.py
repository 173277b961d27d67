"""CO-RFT training stages, metric logging and best-checkpoint selection."""

from src.training.pipeline import (
    Checkpoint,
    EvalEntry,
    build_actor,
    build_critic,
    prepare_dataset,
    train_bc,
    train_offline_rl,
    select_best_checkpoint,
)
from src.training.metrics import MetricRecord, MetricsLog, read_metrics
from src.training.exceptions import TrainingError, TrainingAbortedError

__all__ = [
    'Checkpoint', 'EvalEntry', 'build_actor', 'build_critic', 'prepare_dataset',
    'train_bc', 'train_offline_rl', 'select_best_checkpoint',
    'MetricRecord', 'MetricsLog', 'read_metrics',
    'TrainingError', 'TrainingAbortedError',
]
