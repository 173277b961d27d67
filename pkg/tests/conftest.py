import pytest
import torch

from src.config.enums import ResetMode
from src.config.train_config import TrainConfig
from src.envs.point_reach import PointReachEnv
from src.envs.recorder import collect_demos


@pytest.fixture(autouse=True)
def _single_thread():
    torch.set_num_threads(1)


@pytest.fixture
def tiny_config() -> TrainConfig:
    return TrainConfig(
        env_id="point-reach-2d",
        h=2,
        batch_size=8,
        width=8,
        n_blocks=1,
        actor_hidden=[16],
        bc_steps=20,
        rl_steps=10,
        log_every=5,
        eval_every=5,
        eval_trials=3,
        n_demos=3,
        upsample_k=2,
        seed=3,
    )


@pytest.fixture
def point_dataset(tiny_config):
    return collect_demos(PointReachEnv(), tiny_config.n_demos, ResetMode.IND_RANDOM,
                         upsample_k=tiny_config.upsample_k, seed=0, h=tiny_config.h, gamma=tiny_config.gamma)
