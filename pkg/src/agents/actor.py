"""Deterministic chunked policy and its behavior-cloning and RL objectives."""
import logging
from dataclasses import dataclass
from typing import Sequence

import torch
from torch import nn

from src.agents.exceptions import NonFiniteLossError
from src.data.chunks import ChunkBatch
from src.data.exceptions import EmptyBatchError
from src.neural.autodiff import frozen
from src.neural.exceptions import ShapeMismatchError
from src.neural.layers import MLP
from src.neural.params import ParamSet

logger = logging.getLogger(__name__)

DTYPE = ParamSet.dtype


class ChunkedActor(nn.Module):
    """pi(a_{t:t+h} | s_t): an MLP from the state to h*A outputs, tanh-squashed to the action box."""

    low: torch.Tensor
    high: torch.Tensor

    def __init__(self, state_dim: int, action_dim: int, h: int,
                 low: Sequence[float], high: Sequence[float], hidden: Sequence[int] = (128, 128)):
        super().__init__()
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.h = h
        self.trunk = MLP([state_dim, *hidden, h * action_dim], activation="relu", name="actor.trunk")
        self.register_buffer("low", torch.tensor(list(low), dtype=DTYPE))
        self.register_buffer("high", torch.tensor(list(high), dtype=DTYPE))

    @property
    def scale(self) -> torch.Tensor:
        return (self.high - self.low) / 2.0

    @property
    def center(self) -> torch.Tensor:
        return (self.high + self.low) / 2.0

    def forward(self, states: torch.Tensor) -> torch.Tensor:
        """(B, S) -> (B, h, A); a single (S,) state gives (h, A)."""
        if states.shape[-1] != self.state_dim:
            raise ShapeMismatchError("actor", (..., self.state_dim), states.shape)
        raw = self.trunk(states).reshape(*states.shape[:-1], self.h, self.action_dim)
        return torch.tanh(raw) * self.scale + self.center

    def params(self) -> ParamSet:
        return ParamSet.from_module(self)


def actor_forward(actor: ChunkedActor, states: torch.Tensor) -> torch.Tensor:
    return actor(states)


@dataclass
class ActorLossOutput:
    loss: torch.Tensor
    n_valid: int = 0

    @property
    def value(self) -> float:
        return float(self.loss.detach())


def bc_loss(batch: ChunkBatch, actor: ChunkedActor) -> ActorLossOutput:
    """
    Squared-error behavior cloning over valid (unpadded) chunk steps.

    Per step the error is the squared Euclidean distance between the predicted
    and demonstrated action; the mean is taken over valid steps only.

    Args:
        batch: Demonstration chunks
        actor: Policy being cloned

    Returns:
        Loss and the number of valid steps it averaged over
    """
    mask = batch.valid_mask
    n_valid = int(mask.sum().item())
    if n_valid == 0:
        raise EmptyBatchError("bc_loss needs at least one valid step")
    predicted = actor(batch.first_states)
    per_step = ((predicted - batch.actions) ** 2).sum(dim=-1)
    loss = (per_step * mask).sum() / n_valid
    if not torch.isfinite(loss):
        raise NonFiniteLossError("bc_loss", {"n_valid": n_valid})
    return ActorLossOutput(loss=loss, n_valid=n_valid)


def actor_rl_loss(batch: ChunkBatch, actor: ChunkedActor, critic: nn.Module) -> ActorLossOutput:
    """
    Deterministic chunked policy objective: -(1/h) mean_b sum_i Q(s_t, a_hat_{t:t+i}).

    The critic is frozen while the loss is built, so gradients reach the actor only.
    """
    states = batch.first_states
    with frozen(critic):
        chunk = actor(states)
        q = critic(states, chunk)
        loss = -q.mean()
    if not torch.isfinite(loss):
        raise NonFiniteLossError("actor_rl_loss", {"q_mean": float(q.detach().mean())})
    return ActorLossOutput(loss=loss, n_valid=int(batch.valid_mask.sum().item()))
