"""Chunk policies and episode rollouts in open-loop or receding-horizon execution."""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Protocol

import numpy as np
import torch

from src.agents.actor import ChunkedActor
from src.config.enums import ExecutionMode, ResetMode
from src.envs.base import ToyEnv
from src.envs.experts import scripted_expert

logger = logging.getLogger(__name__)


class ChunkPolicy(Protocol):
    """Anything that maps a state to an (h, A) action chunk."""

    h: int

    def act_chunk(self, env: ToyEnv, state: np.ndarray) -> np.ndarray:
        ...


class ActorPolicy:
    """Trained actor queried without gradients; never touches the parameters."""

    def __init__(self, actor: ChunkedActor):
        self.actor = actor
        self.h = actor.h

    @torch.no_grad()
    def act_chunk(self, env: ToyEnv, state: np.ndarray) -> np.ndarray:
        chunk = self.actor(torch.as_tensor(state, dtype=torch.float64))
        return chunk.cpu().numpy()


class ExpertPolicy:
    """Scripted expert as a one-step chunk policy."""

    h = 1

    def act_chunk(self, env: ToyEnv, state: np.ndarray) -> np.ndarray:
        return scripted_expert(env, state).reshape(1, -1)


class RandomPolicy:
    """Uniform random chunks over the action box from a private seeded stream."""

    def __init__(self, h: int = 1, seed: int = 0):
        self.h = h
        self.rng = np.random.default_rng(seed)

    def reset(self, seed: int) -> None:
        self.rng = np.random.default_rng(seed)

    def act_chunk(self, env: ToyEnv, state: np.ndarray) -> np.ndarray:
        return self.rng.uniform(env.spec.low, env.spec.high, size=(self.h, env.spec.action_dim))


@dataclass
class Rollout:
    states: List[List[float]] = field(default_factory=list)
    actions: List[List[float]] = field(default_factory=list)
    rewards: List[float] = field(default_factory=list)
    success: bool = False
    n_queries: int = 0

    @property
    def steps(self) -> int:
        return len(self.actions)


def act(
    policy: ChunkPolicy,
    env: ToyEnv,
    mode: ExecutionMode = ExecutionMode.OPEN_LOOP_CHUNK,
    seed: int = 0,
    reset_mode: ResetMode = ResetMode.IND_RANDOM,
    max_steps: Optional[int] = None,
) -> Rollout:
    """
    Run one episode with a chunk policy.

    In open-loop mode all h actions of a chunk are executed before the policy
    is queried again; in receding mode only the first action is executed.

    Args:
        policy: Chunk policy
        env: Environment (reset here)
        mode: Execution mode
        seed: Reset seed
        reset_mode: Reset region
        max_steps: Optional cap below the env's own limit

    Returns:
        The rollout with the number of policy queries
    """
    mode = ExecutionMode(mode)
    limit = env.spec.max_steps if max_steps is None else min(max_steps, env.spec.max_steps)
    state = env.reset(seed, reset_mode)
    rollout = Rollout()

    while rollout.steps < limit:
        chunk = np.asarray(policy.act_chunk(env, state), dtype=np.float64)
        rollout.n_queries += 1
        n_exec = chunk.shape[0] if mode is ExecutionMode.OPEN_LOOP_CHUNK else 1
        for action in chunk[:n_exec]:
            result = env.step(action)
            rollout.states.append(state.tolist())
            rollout.actions.append(action.tolist())
            rollout.rewards.append(result.reward)
            state = result.next_state
            if result.done or rollout.steps >= limit:
                rollout.success = result.success
                return rollout
    return rollout
