"""Chunk slicing, Monte-Carlo return annotation and tensor collation."""
import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
import torch

from src.data.exceptions import EmptyBatchError, EmptyEpisodeError
from src.data.models import ChunkSample, Episode

logger = logging.getLogger(__name__)

DTYPE = torch.float64


def mc_return_to_go(episode: Episode, gamma: float) -> List[float]:
    """
    Discounted Monte-Carlo return-to-go for every step of an episode.

    Computed by the backward recursion out[t] = r[t] + gamma * out[t+1] with
    out[T] = r[T] for the final step.

    Args:
        episode: Source episode
        gamma: Discount factor in [0, 1]

    Returns:
        One return per step
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    returns = [0.0] * len(episode.steps)
    running = 0.0
    for t in range(len(episode.steps) - 1, -1, -1):
        reward = float(episode.steps[t].reward)
        running = reward if t == len(episode.steps) - 1 else reward + gamma * running
        returns[t] = running
    return returns


def make_chunks(episode: Episode, h: int, gamma: float, episode_index: int = 0) -> List[ChunkSample]:
    """
    Slice an episode into one h-step chunk per time step.

    Windows that run past the terminal step are padded with zero actions, zero
    rewards and a saturated done mask; the last real state is repeated so every
    chunk carries h + 1 states.

    Args:
        episode: Source episode (non-empty)
        h: Chunk length, at least 1
        gamma: Discount used for the Monte-Carlo return
        episode_index: Index of the episode inside its dataset, kept on every chunk

    Returns:
        List of ChunkSample, one per step
    """
    if h < 1:
        raise ValueError(f"h must be >= 1, got {h}")
    if not episode.steps:
        raise EmptyEpisodeError("cannot chunk an empty episode", record_index=episode_index)

    steps = episode.steps
    last = len(steps) - 1
    returns = mc_return_to_go(episode, gamma)
    zero_action = [0.0] * episode.action_dim

    chunks = []
    for t in range(len(steps)):
        valid_len = min(h, len(steps) - t)
        states = [list(steps[min(t + i, last)].state) for i in range(h + 1)]
        actions = [list(steps[t + i].action) if i < valid_len else list(zero_action) for i in range(h)]
        rewards = [float(steps[t + i].reward) if i < valid_len else 0.0 for i in range(h)]
        done_mask = [t + i >= last for i in range(h)]
        chunks.append(ChunkSample(
            states=states,
            actions=actions,
            rewards=rewards,
            done_mask=done_mask,
            mc_return=returns[t],
            valid_len=valid_len,
            episode_index=episode_index,
            t=t,
        ))
    return chunks


@dataclass(frozen=True)
class ChunkBatch:
    """Stacked chunk tensors, float64.

    Shapes: states (B, h+1, S), actions (B, h, A), rewards/done (B, h),
    mc_return (B,), valid_len (B,).
    """

    states: torch.Tensor
    actions: torch.Tensor
    rewards: torch.Tensor
    done: torch.Tensor
    mc_return: torch.Tensor
    valid_len: torch.Tensor

    @classmethod
    def from_samples(cls, samples: Sequence[ChunkSample]) -> "ChunkBatch":
        if not samples:
            raise EmptyBatchError("cannot collate an empty list of chunks")
        return cls(
            states=torch.tensor(np.array([s.states for s in samples]), dtype=DTYPE),
            actions=torch.tensor(np.array([s.actions for s in samples]), dtype=DTYPE),
            rewards=torch.tensor([s.rewards for s in samples], dtype=DTYPE),
            done=torch.tensor([s.done_mask for s in samples], dtype=DTYPE),
            mc_return=torch.tensor([s.mc_return for s in samples], dtype=DTYPE),
            valid_len=torch.tensor([s.valid_len for s in samples], dtype=torch.long),
        )

    def index(self, idx) -> "ChunkBatch":
        idx = torch.as_tensor(idx, dtype=torch.long)
        return ChunkBatch(
            states=self.states[idx],
            actions=self.actions[idx],
            rewards=self.rewards[idx],
            done=self.done[idx],
            mc_return=self.mc_return[idx],
            valid_len=self.valid_len[idx],
        )

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def h(self) -> int:
        return self.actions.shape[1]

    @property
    def first_states(self) -> torch.Tensor:
        return self.states[:, 0]

    @property
    def valid_mask(self) -> torch.Tensor:
        """(B, h) float mask of real, unpadded action positions."""
        positions = torch.arange(self.h).unsqueeze(0)
        return (positions < self.valid_len.unsqueeze(1)).to(DTYPE)
