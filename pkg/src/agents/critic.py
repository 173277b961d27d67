"""Chunked Q-function, chunked TD targets and the calibrated conservative critic objective."""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import torch
from torch import nn

from src.agents.actor import ChunkedActor
from src.agents.exceptions import NonFiniteLossError
from src.data.chunks import ChunkBatch
from src.neural.exceptions import ShapeMismatchError
from src.neural.layers import MLP, AttentionBlock
from src.neural.params import ParamSet

logger = logging.getLogger(__name__)

DTYPE = ParamSet.dtype


class ChunkedCritic(nn.Module):
    """
    Q-values for every prefix of an action chunk from one causal transformer pass.

    Token 0 embeds the state, token i (1..h) embeds action a_{t+i-1} plus a
    learned position offset. A shared linear head on token i gives
    Q(s_t, a_{t:t+i}); the causal mask keeps it blind to later actions.
    """

    def __init__(self, state_dim: int, action_dim: int, h: int, width: int = 64, n_blocks: int = 2):
        super().__init__()
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.h = h
        self.width = width
        self.state_embedder = MLP([state_dim, width, width], activation="gelu", name="critic.state_embedder")
        self.action_embedder = MLP([action_dim, width, width], activation="gelu", name="critic.action_embedder")
        self.position = nn.Parameter(0.02 * torch.randn(h, width, dtype=DTYPE))
        self.blocks = nn.ModuleList(
            [AttentionBlock(width, h + 1, name=f"critic.block{i}") for i in range(n_blocks)]
        )
        self.q_head = nn.Linear(width, 1, dtype=DTYPE)

    def forward(self, states: torch.Tensor, chunks: torch.Tensor) -> torch.Tensor:
        """(B, S), (B, h, A) -> (B, h) prefix Q-values."""
        if chunks.dim() < 2 or chunks.shape[-2:] != (self.h, self.action_dim):
            raise ShapeMismatchError("critic.chunk", (..., self.h, self.action_dim), chunks.shape)
        if states.shape[-1] != self.state_dim or states.shape[:-1] != chunks.shape[:-2]:
            raise ShapeMismatchError("critic.state", (*chunks.shape[:-2], self.state_dim), states.shape)

        state_token = self.state_embedder(states).unsqueeze(-2)
        action_tokens = self.action_embedder(chunks) + self.position
        tokens = torch.cat([state_token, action_tokens], dim=-2)
        for block in self.blocks:
            tokens = block(tokens, causal=True)
        return self.q_head(tokens[..., 1:, :]).squeeze(-1)

    def params(self) -> ParamSet:
        return ParamSet.from_module(self)


def critic_forward(critic: ChunkedCritic, state: torch.Tensor, chunk: torch.Tensor) -> torch.Tensor:
    """Prefix Q-values; accepts a single (S,), (h, A) pair or batched inputs."""
    if state.dim() == 1:
        return critic(state.unsqueeze(0), chunk.unsqueeze(0)).squeeze(0)
    return critic(state, chunk)


def _range(actor: ChunkedActor) -> torch.Tensor:
    return actor.high - actor.low


@torch.no_grad()
def chunked_td_targets(
    batch: ChunkBatch,
    target_critic: ChunkedCritic,
    actor: ChunkedActor,
    gamma: float,
    target_noise: float = 0.0,
    target_noise_clip: float = 0.5,
    generator: Optional[torch.Generator] = None,
) -> torch.Tensor:
    """
    Per-prefix bootstrapped targets, shape (B, h), gradient-stopped.

    target_i = sum_{j<i} gamma^j r_{t+j} live_j + gamma^i live_i Qbar(s_{t+i}, pi(s_{t+i}))[h]

    live_j is 0 once the episode terminated before step j; Qbar is the target
    critic's full-chunk head on the actor's fresh chunk at s_{t+i}. With
    target_noise > 0 the bootstrap chunk gets clipped Gaussian smoothing noise.
    """
    n, h = batch.rewards.shape
    done = batch.done
    live = torch.cat([torch.ones(n, 1, dtype=DTYPE), 1.0 - done[:, :-1]], dim=1)
    discounts = torch.tensor([gamma ** j for j in range(h)], dtype=DTYPE)
    partial = torch.cumsum(discounts * batch.rewards * live, dim=1)

    boot_states = batch.states[:, 1:].reshape(n * h, -1)
    boot_chunks = actor(boot_states)
    if target_noise > 0.0:
        width = _range(actor)
        noise = torch.randn(boot_chunks.shape, generator=generator, dtype=DTYPE) * target_noise * width
        noise = torch.maximum(torch.minimum(noise, target_noise_clip * width), -target_noise_clip * width)
        boot_chunks = torch.clamp(boot_chunks + noise, actor.low, actor.high)
    q_boot = target_critic(boot_states, boot_chunks)[:, -1].reshape(n, h)

    boot_discounts = torch.tensor([gamma ** i for i in range(1, h + 1)], dtype=DTYPE)
    return partial + boot_discounts * (1.0 - done) * q_boot


def sample_ood_chunks(
    actor: ChunkedActor,
    states: torch.Tensor,
    n_ood: int,
    noise_scale: float,
    generator: Optional[torch.Generator] = None,
) -> Dict[str, torch.Tensor]:
    """
    Out-of-distribution chunks for the regularizer.

    n_ood // 2 chunks per state are the actor's chunk plus Gaussian noise
    (std noise_scale * action range) clamped to the box; the rest are uniform
    over the box.

    Returns:
        {"policy": (B, n_policy, h, A), "uniform": (B, n_uniform, h, A)}
    """
    if n_ood < 1:
        raise ValueError(f"n_ood must be >= 1, got {n_ood}")
    n = states.shape[0]
    n_policy = n_ood // 2
    n_uniform = n_ood - n_policy
    shape = (n, actor.h, actor.action_dim)
    with torch.no_grad():
        base = actor(states).unsqueeze(1).expand(n, n_policy, *shape[1:])
        noise = torch.randn((n, n_policy, *shape[1:]), generator=generator, dtype=DTYPE) * noise_scale * _range(actor)
        policy = torch.clamp(base + noise, actor.low, actor.high)
        uniform = actor.low + _range(actor) * torch.rand((n, n_uniform, *shape[1:]), generator=generator, dtype=DTYPE)
    return {"policy": policy, "uniform": uniform}


def calibrated_gap(q_ood: torch.Tensor, q_data: torch.Tensor, mc_return: torch.Tensor) -> torch.Tensor:
    """
    mean over (batch, OOD chunk, prefix) of max(Q_ood, V) minus mean of dataset Q.

    Args:
        q_ood: (B, n_ood, h) Q-values of OOD chunks
        q_data: (B, h) Q-values of dataset chunks
        mc_return: (B,) Monte-Carlo return-to-go used as V
    """
    floor = mc_return.reshape(-1, 1, 1).expand_as(q_ood)
    return torch.maximum(q_ood, floor).mean() - q_data.mean()


def _q_on_chunks(critic: ChunkedCritic, states: torch.Tensor, chunks: torch.Tensor) -> torch.Tensor:
    n, k = chunks.shape[:2]
    repeated = states.unsqueeze(1).expand(n, k, states.shape[-1]).reshape(n * k, -1)
    return critic(repeated, chunks.reshape(n * k, *chunks.shape[2:])).reshape(n, k, -1)


@dataclass
class RegularizerOutput:
    value: torch.Tensor
    q_data: torch.Tensor
    q_policy_mean: float
    q_uniform_mean: float


def calql_regularizer(
    batch: ChunkBatch,
    critic: ChunkedCritic,
    actor: ChunkedActor,
    noise_scale: float,
    n_ood: int,
    generator: Optional[torch.Generator] = None,
    q_data: Optional[torch.Tensor] = None,
) -> RegularizerOutput:
    """
    Calibrated conservative regularizer of the chunked critic.

    OOD Q-values are pushed down but never below the Monte-Carlo value of the
    state; dataset-chunk Q-values are pushed up. Gradients flow into the critic
    only. Deterministic given the generator state.
    """
    states = batch.first_states
    if q_data is None:
        q_data = critic(states, batch.actions)
    ood = sample_ood_chunks(actor, states, n_ood, noise_scale, generator)
    q_parts = {name: _q_on_chunks(critic, states, chunks) for name, chunks in ood.items() if chunks.shape[1] > 0}
    q_ood = torch.cat(list(q_parts.values()), dim=1)
    value = calibrated_gap(q_ood, q_data, batch.mc_return)
    return RegularizerOutput(
        value=value,
        q_data=q_data,
        q_policy_mean=float(q_parts["policy"].detach().mean()) if "policy" in q_parts else float("nan"),
        q_uniform_mean=float(q_parts["uniform"].detach().mean()),
    )


@dataclass
class CriticLossOutput:
    loss: torch.Tensor
    td_loss: float
    regularizer: float
    q_data_mean: float
    q_ood_mean: float
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def value(self) -> float:
        return float(self.loss.detach())


def critic_loss(
    batch: ChunkBatch,
    critic: ChunkedCritic,
    target_critic: ChunkedCritic,
    actor: ChunkedActor,
    gamma: float,
    alpha: float,
    noise_scale: float = 0.1,
    n_ood: int = 4,
    generator: Optional[torch.Generator] = None,
    target_noise: float = 0.0,
    target_noise_clip: float = 0.5,
) -> CriticLossOutput:
    """
    Chunked CalQL critic objective.

    L = mean_b (1/h) sum_i (Q(s_t, a_{t:t+i}) - target_i)^2 + alpha * R,
    with alpha = 0 giving pure chunked TD learning.

    Raises:
        NonFiniteLossError: the loss is NaN or Inf (diagnostics attached)
    """
    targets = chunked_td_targets(batch, target_critic, actor, gamma,
                                 target_noise=target_noise, target_noise_clip=target_noise_clip,
                                 generator=generator)
    q_data = critic(batch.first_states, batch.actions)
    td_loss = ((q_data - targets) ** 2).mean()
    reg = calql_regularizer(batch, critic, actor, noise_scale, n_ood, generator=generator, q_data=q_data)
    loss = td_loss + alpha * reg.value

    out = CriticLossOutput(
        loss=loss,
        td_loss=float(td_loss.detach()),
        regularizer=float(reg.value.detach()),
        q_data_mean=float(q_data.detach().mean()),
        q_ood_mean=reg.q_uniform_mean,
        diagnostics={
            "target_mean": float(targets.mean()),
            "q_policy_mean": reg.q_policy_mean,
            "batch_size": float(len(batch)),
        },
    )
    if not torch.isfinite(loss):
        raise NonFiniteLossError("critic_loss", {
            "td_loss": out.td_loss, "regularizer": out.regularizer, "q_data_mean": out.q_data_mean,
            **out.diagnostics,
        })
    return out
