"""Episode, chunk and dataset data models."""
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator

from src.config.enums import InitMode


class Step(BaseModel):
    """One recorded transition: the state acted from, the action, its reward and the done flag."""
    model_config = ConfigDict(frozen=True)

    state: List[float] = Field(..., description="State the action was taken from")
    action: List[float] = Field(..., description="Action taken")
    reward: float = Field(0.0, description="Reward received for this step")
    done: bool = Field(False, description="True only on the final step of the episode")


class Episode(BaseModel):
    """An ordered sequence of steps plus collection metadata."""
    model_config = ConfigDict(frozen=True)

    env_id: str = Field(..., description="Registry id of the environment that produced it")
    init_mode: InitMode = Field(InitMode.RANDOM, description="Goal/object initialization mode")
    steps: List[Step] = Field(default_factory=list)
    success: bool = Field(False, description="Whether the success predicate was reached")

    @model_validator(mode="after")
    def _check_invariants(self) -> "Episode":
        if not self.steps:
            return self
        state_dim = len(self.steps[0].state)
        action_dim = len(self.steps[0].action)
        for t, step in enumerate(self.steps):
            if len(step.state) != state_dim or len(step.action) != action_dim:
                raise ValueError(f"step {t} has state/action dims {len(step.state)}/{len(step.action)}, "
                                 f"expected {state_dim}/{action_dim}")
            if step.done and t != len(self.steps) - 1:
                raise ValueError(f"done flag set on non-final step {t}")
        return self

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def state_dim(self) -> int:
        return len(self.steps[0].state) if self.steps else 0

    @property
    def action_dim(self) -> int:
        return len(self.steps[0].action) if self.steps else 0

    @property
    def states(self) -> np.ndarray:
        return np.asarray([s.state for s in self.steps], dtype=np.float64)

    @property
    def actions(self) -> np.ndarray:
        return np.asarray([s.action for s in self.steps], dtype=np.float64)

    @property
    def rewards(self) -> np.ndarray:
        return np.asarray([s.reward for s in self.steps], dtype=np.float64)


class ChunkSample(BaseModel):
    """A training window of h steps starting at step t of an episode.

    Windows overlapping the terminal step are padded: zero actions, zero
    rewards, saturated done flags and the last real state repeated.
    """
    model_config = ConfigDict(frozen=True)

    states: List[List[float]] = Field(..., description="s_t .. s_{t+h}")
    actions: List[List[float]] = Field(..., description="a_t .. a_{t+h-1}")
    rewards: List[float]
    done_mask: List[bool] = Field(..., description="True iff the episode terminated at or before step t+i")
    mc_return: float = Field(..., description="Discounted return-to-go from s_t")
    valid_len: int = Field(..., ge=1, description="Number of real, unpadded actions")
    episode_index: int = Field(0, ge=0)
    t: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check_invariants(self) -> "ChunkSample":
        h = len(self.actions)
        if len(self.states) != h + 1 or len(self.rewards) != h or len(self.done_mask) != h:
            raise ValueError("chunk field lengths disagree with h")
        if self.valid_len > h:
            raise ValueError(f"valid_len {self.valid_len} exceeds h={h}")
        for i in range(self.valid_len, h):
            if any(a != 0.0 for a in self.actions[i]) or self.rewards[i] != 0.0 or not self.done_mask[i]:
                raise ValueError(f"padded position {i} is not zeroed and terminal")
        for i in range(1, h):
            if self.done_mask[i - 1] and not self.done_mask[i]:
                raise ValueError("done_mask must be non-decreasing")
        return self

    @property
    def h(self) -> int:
        return len(self.actions)


class OfflineDataset(BaseModel):
    """Demonstration episodes for one environment; chunks are derived on demand."""
    model_config = ConfigDict(frozen=True)

    env_id: str
    state_dim: int = Field(..., ge=1)
    action_dim: int = Field(..., ge=1)
    h: int = Field(..., ge=1)
    gamma: float = Field(..., ge=0.0, le=1.0)
    episodes: List[Episode] = Field(default_factory=list)
    env_spec: Optional[Dict[str, Any]] = Field(None, description="Serialized EnvSpec of the source env")
    metadata: Dict[str, Any] = Field(default_factory=dict, description="Collection metadata and warnings")

    _chunks: Optional[list] = PrivateAttr(default=None)
    _batch: Optional[object] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _check_dims(self) -> "OfflineDataset":
        for index, episode in enumerate(self.episodes):
            if episode.steps and (episode.state_dim != self.state_dim or episode.action_dim != self.action_dim):
                raise ValueError(f"episode {index} dims {episode.state_dim}/{episode.action_dim} "
                                 f"differ from dataset {self.state_dim}/{self.action_dim}")
        return self

    @property
    def chunks(self) -> List[ChunkSample]:
        """All chunks of all episodes, in episode then time order."""
        if self._chunks is None:
            from src.data.chunks import make_chunks

            chunks = []
            for index, episode in enumerate(self.episodes):
                chunks.extend(make_chunks(episode, self.h, self.gamma, episode_index=index))
            self._chunks = chunks
        return self._chunks

    def chunk_batch(self):
        """All chunks stacked into one ChunkBatch (cached)."""
        if self._batch is None:
            from src.data.chunks import ChunkBatch

            self._batch = ChunkBatch.from_samples(self.chunks)
        return self._batch

    def with_horizon(self, h: int) -> "OfflineDataset":
        """Same episodes, chunks re-derived with another chunk length."""
        return OfflineDataset(**{**self._field_values(), "h": h})

    def successful_only(self) -> "OfflineDataset":
        return OfflineDataset(**{**self._field_values(), "episodes": [e for e in self.episodes if e.success]})

    def __eq__(self, other: object) -> bool:
        # Field equality only; cached chunk tensors are not part of the identity
        if not isinstance(other, OfflineDataset):
            return NotImplemented
        return self.model_dump() == other.model_dump()

    __hash__ = None

    def _field_values(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in type(self).model_fields}

    @property
    def success_rate(self) -> float:
        if not self.episodes:
            return 0.0
        return sum(e.success for e in self.episodes) / len(self.episodes)
