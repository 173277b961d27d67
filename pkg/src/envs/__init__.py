"""Seedable sparse-reward toy environments, scripted experts and the demo recorder."""

from src.envs.base import Box, EnvSpec, StepResult, ToyEnv
from src.envs.registry import ENV_IDS, make_env, get_spec
from src.envs.experts import scripted_expert
from src.envs.recorder import collect_demos, record_episode

__all__ = [
    'Box', 'EnvSpec', 'StepResult', 'ToyEnv',
    'ENV_IDS', 'make_env', 'get_spec',
    'scripted_expert', 'collect_demos', 'record_episode',
]
