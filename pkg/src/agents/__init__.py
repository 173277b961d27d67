"""Chunked actor, chunked critic and the rollout policies built on them."""

from src.agents.actor import ChunkedActor, actor_forward, bc_loss, actor_rl_loss, ActorLossOutput
from src.agents.critic import (
    ChunkedCritic,
    critic_forward,
    chunked_td_targets,
    sample_ood_chunks,
    calibrated_gap,
    calql_regularizer,
    critic_loss,
    CriticLossOutput,
    RegularizerOutput,
)
from src.agents.policies import ActorPolicy, ExpertPolicy, RandomPolicy, Rollout, act
from src.agents.exceptions import NonFiniteLossError

__all__ = [
    'ChunkedActor', 'actor_forward', 'bc_loss', 'actor_rl_loss', 'ActorLossOutput',
    'ChunkedCritic', 'critic_forward', 'chunked_td_targets', 'sample_ood_chunks',
    'calibrated_gap', 'calql_regularizer', 'critic_loss', 'CriticLossOutput', 'RegularizerOutput',
    'ActorPolicy', 'ExpertPolicy', 'RandomPolicy', 'Rollout', 'act',
    'NonFiniteLossError',
]
