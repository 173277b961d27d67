"""Shared builders and numerical checks for the test suite."""
from typing import Callable, List, Optional

import numpy as np
import torch

from src.data.chunks import ChunkBatch, make_chunks
from src.data.models import Episode, Step
from src.neural.autodiff import backward
from src.neural.params import ParamSet


def random_episode(rng: np.random.Generator, length: int, state_dim: int = 3, action_dim: int = 2,
                   reward_p: float = 0.3, env_id: str = "synthetic") -> Episode:
    steps = []
    for t in range(length):
        steps.append(Step(
            state=rng.normal(size=state_dim).tolist(),
            action=rng.uniform(-1, 1, size=action_dim).tolist(),
            reward=float(rng.random() < reward_p),
            done=t == length - 1,
        ))
    return Episode(env_id=env_id, steps=steps, success=False)


def random_chunk_batch(seed: int, h: int, state_dim: int = 3, action_dim: int = 2,
                       n_episodes: int = 4, max_len: int = 8, gamma: float = 0.9) -> ChunkBatch:
    rng = np.random.default_rng(seed)
    samples = []
    for index in range(n_episodes):
        episode = random_episode(rng, int(rng.integers(1, max_len + 1)), state_dim, action_dim)
        samples.extend(make_chunks(episode, h, gamma, episode_index=index))
    return ChunkBatch.from_samples(samples)


def finite_difference_check(loss_fn: Callable[[], torch.Tensor], params: ParamSet, eps: float = 1e-5,
                            n_entries: int = 12, seed: int = 0, names: Optional[List[str]] = None) -> float:
    """
    Max relative error between backward() and central differences on sampled parameter entries.

    Relative error uses a unit floor: |a - n| / max(1, |a|, |n|).
    """
    rng = np.random.default_rng(seed)
    grads = backward(loss_fn(), params)
    worst = 0.0
    for name in names or params.names:
        tensor = params[name]
        flat_size = tensor.numel()
        for index in rng.choice(flat_size, size=min(n_entries, flat_size), replace=False):
            index = int(index)
            with torch.no_grad():
                original = tensor.view(-1)[index].item()
                tensor.view(-1)[index] = original + eps
                plus = loss_fn().item()
                tensor.view(-1)[index] = original - eps
                minus = loss_fn().item()
                tensor.view(-1)[index] = original
            numeric = (plus - minus) / (2 * eps)
            analytic = grads[name].reshape(-1)[index].item()
            worst = max(worst, abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric)))
    return worst
