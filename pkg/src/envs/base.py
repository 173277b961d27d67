"""Shared environment machinery: specs, init regions and the stepping contract."""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from src.config.enums import ResetMode

logger = logging.getLogger(__name__)


class Box(BaseModel):
    """Axis-aligned box in goal/object parameter space."""
    low: List[float]
    high: List[float]

    @model_validator(mode="after")
    def _check_bounds(self) -> "Box":
        if len(self.low) != len(self.high):
            raise ValueError("box bounds have different lengths")
        if any(lo > hi for lo, hi in zip(self.low, self.high)):
            raise ValueError(f"empty box {self.low} .. {self.high}")
        return self

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.low) + np.asarray(self.high)) / 2.0

    def contains(self, point) -> bool:
        point = np.asarray(point, dtype=np.float64)
        return bool(np.all(point >= np.asarray(self.low)) and np.all(point <= np.asarray(self.high)))

    def intersects(self, other: "Box") -> bool:
        return all(lo1 <= hi2 and lo2 <= hi1
                   for lo1, hi1, lo2, hi2 in zip(self.low, self.high, other.low, other.high))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(np.asarray(self.low), np.asarray(self.high))


class EnvSpec(BaseModel):
    """Static description of an environment, serializable into dataset headers."""
    env_id: str
    state_dim: int = Field(..., ge=1)
    action_dim: int = Field(..., ge=1)
    action_low: List[float]
    action_high: List[float]
    max_steps: int = Field(..., ge=1)
    init_region_ind: Box
    init_region_ood: Box

    @model_validator(mode="after")
    def _check_regions(self) -> "EnvSpec":
        if len(self.action_low) != self.action_dim or len(self.action_high) != self.action_dim:
            raise ValueError("action bounds must match action_dim")
        if self.init_region_ind.intersects(self.init_region_ood):
            raise ValueError("IND and OOD init regions must be disjoint")
        return self

    @property
    def low(self) -> np.ndarray:
        return np.asarray(self.action_low, dtype=np.float64)

    @property
    def high(self) -> np.ndarray:
        return np.asarray(self.action_high, dtype=np.float64)

    def region(self, mode: ResetMode) -> Box:
        return self.init_region_ood if mode is ResetMode.OOD else self.init_region_ind


@dataclass(frozen=True)
class StepResult:
    next_state: np.ndarray
    reward: float
    done: bool
    success: bool
    info: Dict[str, Any] = field(default_factory=dict)


class ToyEnv(ABC):
    """Deterministic sparse-reward environment with its own RNG.

    Success is judged on the state the agent acts from: stepping from a
    success state pays reward 1, ends the episode and leaves the state
    unchanged. Every other step applies the dynamics with reward 0.
    """

    spec: EnvSpec

    def __init__(self):
        self.rng = np.random.default_rng()
        self._state: Optional[np.ndarray] = None
        self._steps = 0

    @property
    def state(self) -> np.ndarray:
        if self._state is None:
            raise RuntimeError(f"{self.spec.env_id}: call reset() before using the state")
        return self._state.copy()

    @property
    def steps_taken(self) -> int:
        return self._steps

    def reset(self, seed: int, mode: ResetMode = ResetMode.IND_RANDOM) -> np.ndarray:
        """Start a new episode; the same seed and mode give the same state."""
        mode = ResetMode(mode)
        self.rng = np.random.default_rng(seed)
        params = self.draw_params(mode)
        self._state = self.initial_state(params)
        self._steps = 0
        return self._state.copy()

    def draw_params(self, mode: ResetMode) -> np.ndarray:
        box = self.spec.region(mode)
        if mode is ResetMode.IND_FIXED:
            return box.center
        return box.sample(self.rng)

    def step(self, action) -> StepResult:
        state = self.state
        action = np.asarray(action, dtype=np.float64).reshape(-1)
        if action.shape[0] != self.spec.action_dim:
            raise ValueError(f"{self.spec.env_id}: action has {action.shape[0]} dims, expected {self.spec.action_dim}")
        clipped = np.clip(action, self.spec.low, self.spec.high)
        info = {"clamped": bool(np.any(clipped != action))}
        if info["clamped"]:
            logger.debug(f"{self.spec.env_id}: clamped out-of-bounds action {action.tolist()}")

        self._steps += 1
        if self.is_success(state):
            return StepResult(next_state=state, reward=1.0, done=True, success=True, info=info)

        next_state = self.transition(state, clipped)
        self._state = next_state
        done = self._steps >= self.spec.max_steps
        return StepResult(next_state=next_state.copy(), reward=0.0, done=done, success=False, info=info)

    @abstractmethod
    def initial_state(self, params: np.ndarray) -> np.ndarray:
        """Build the start state from drawn goal/object parameters."""

    @abstractmethod
    def transition(self, state: np.ndarray, action: np.ndarray) -> np.ndarray:
        """Deterministic dynamics for an in-bounds action."""

    @abstractmethod
    def is_success(self, state: np.ndarray) -> bool:
        """Success predicate."""

    @abstractmethod
    def goal_params(self, state: np.ndarray) -> np.ndarray:
        """The goal/object parameters encoded in a state (for region checks)."""
