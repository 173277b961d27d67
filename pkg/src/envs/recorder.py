"""Demonstration recorder with Reward Upsampling."""
import logging
from typing import List

import numpy as np

from src.config.enums import ResetMode
from src.data.models import Episode, OfflineDataset, Step
from src.envs.base import ToyEnv
from src.envs.experts import scripted_expert

logger = logging.getLogger(__name__)

MIN_EXPERT_SUCCESS_RATE = 0.5


def record_episode(env: ToyEnv, seed: int, mode: ResetMode, upsample_k: int = 0) -> Episode:
    """
    Run the scripted expert for one episode.

    On success the terminal step is followed by upsample_k hold-still steps
    (success state repeated, zero action, reward 1); only the last of them is done.

    Args:
        env: Environment to run
        seed: Reset seed
        mode: Reset region
        upsample_k: Extra reward-bearing steps appended after success

    Returns:
        The recorded Episode
    """
    state = env.reset(seed, mode)
    steps: List[Step] = []
    while True:
        action = np.clip(scripted_expert(env, state), env.spec.low, env.spec.high)
        result = env.step(action)
        steps.append(Step(state=state.tolist(), action=action.tolist(), reward=result.reward, done=result.done))
        if result.done:
            break
        state = result.next_state

    success = result.success
    if success and upsample_k > 0:
        final = steps[-1]
        steps[-1] = Step(state=final.state, action=final.action, reward=final.reward, done=False)
        zero = [0.0] * env.spec.action_dim
        for i in range(upsample_k):
            steps.append(Step(state=result.next_state.tolist(), action=zero, reward=1.0, done=i == upsample_k - 1))

    return Episode(env_id=env.spec.env_id, init_mode=mode.init_mode, steps=steps, success=success)


def collect_demos(
    env: ToyEnv,
    n_episodes: int,
    init_mode: ResetMode = ResetMode.IND_RANDOM,
    upsample_k: int = 5,
    seed: int = 0,
    h: int = 4,
    gamma: float = 0.99,
) -> OfflineDataset:
    """
    Record n_episodes expert demonstrations into an OfflineDataset.

    Failed episodes are kept with success=False. A run whose expert success
    rate falls below 50% records a warning in the dataset metadata.

    Args:
        env: Environment to record in
        n_episodes: Number of episodes, at least 1
        init_mode: Reset region for every episode
        upsample_k: Reward Upsampling count, at least 0
        seed: Master seed for the per-episode reset seeds
        h: Chunk length the dataset is derived with
        gamma: Discount used for Monte-Carlo returns

    Returns:
        The recorded dataset
    """
    if n_episodes < 1:
        raise ValueError(f"n_episodes must be >= 1, got {n_episodes}")
    if upsample_k < 0:
        raise ValueError(f"upsample_k must be >= 0, got {upsample_k}")
    init_mode = ResetMode(init_mode)

    episode_seeds = np.random.default_rng(seed).integers(0, 2**31 - 1, size=n_episodes)
    episodes = [record_episode(env, int(s), init_mode, upsample_k) for s in episode_seeds]

    success_rate = sum(e.success for e in episodes) / n_episodes
    warnings = []
    if success_rate < MIN_EXPERT_SUCCESS_RATE:
        message = f"expert success rate {success_rate:.2f} is below {MIN_EXPERT_SUCCESS_RATE:.2f}"
        warnings.append(message)
        logger.warning(f"{env.spec.env_id}: {message}")

    logger.info(f"Collected {n_episodes} demos on {env.spec.env_id} ({init_mode.value}), "
                f"expert SR {success_rate:.2f}, upsample_k={upsample_k}")
    return OfflineDataset(
        env_id=env.spec.env_id,
        state_dim=env.spec.state_dim,
        action_dim=env.spec.action_dim,
        h=h,
        gamma=gamma,
        episodes=episodes,
        env_spec=env.spec.model_dump(),
        metadata={
            "expert_success_rate": success_rate,
            "upsample_k": upsample_k,
            "reset_mode": init_mode.value,
            "seed": seed,
            "warnings": warnings,
        },
    )
