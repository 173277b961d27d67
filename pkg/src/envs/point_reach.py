"""point-reach-2d: a point mass driven by velocity commands toward a goal."""
import numpy as np

from src.envs.base import Box, EnvSpec, ToyEnv

DT = 0.1
SUCCESS_RADIUS = 0.05
START = np.zeros(2)


class PointReachEnv(ToyEnv):
    """State (x, y, gx, gy); action is a velocity in [-1, 1]^2."""

    spec = EnvSpec(
        env_id="point-reach-2d",
        state_dim=4,
        action_dim=2,
        action_low=[-1.0, -1.0],
        action_high=[1.0, 1.0],
        max_steps=40,
        init_region_ind=Box(low=[0.2, 0.2], high=[0.6, 0.6]),
        init_region_ood=Box(low=[0.65, 0.2], high=[0.85, 0.6]),
    )

    def initial_state(self, params: np.ndarray) -> np.ndarray:
        return np.concatenate([START, params]).astype(np.float64)

    def transition(self, state: np.ndarray, action: np.ndarray) -> np.ndarray:
        position = np.clip(state[:2] + DT * action, -1.0, 1.0)
        return np.concatenate([position, state[2:]])

    def is_success(self, state: np.ndarray) -> bool:
        return bool(np.linalg.norm(state[:2] - state[2:]) < SUCCESS_RADIUS)

    def goal_params(self, state: np.ndarray) -> np.ndarray:
        return state[2:].copy()
