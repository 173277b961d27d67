"""chain-sparse: a 1-D chain of cells with a single reward at the far end."""
import numpy as np

from src.config.enums import ResetMode
from src.envs.base import Box, EnvSpec, ToyEnv

N_CELLS = 20
GOAL_CELL = N_CELLS - 1


class ChainEnv(ToyEnv):
    """Value-propagation probe. State is [cell / 19]; actions round to -1, 0 or +1."""

    spec = EnvSpec(
        env_id="chain-sparse",
        state_dim=1,
        action_dim=1,
        action_low=[-1.0],
        action_high=[1.0],
        max_steps=60,
        init_region_ind=Box(low=[0.0], high=[0.0]),
        init_region_ood=Box(low=[5.0], high=[9.0]),
    )

    def draw_params(self, mode: ResetMode) -> np.ndarray:
        box = self.spec.region(mode)
        if mode is ResetMode.IND_FIXED:
            return np.round(box.center)
        return np.asarray([self.rng.integers(int(box.low[0]), int(box.high[0]) + 1)], dtype=np.float64)

    def initial_state(self, params: np.ndarray) -> np.ndarray:
        return self.encode(int(params[0]))

    def transition(self, state: np.ndarray, action: np.ndarray) -> np.ndarray:
        move = int(np.sign(action[0]) * np.floor(abs(action[0]) + 0.5))
        cell = min(max(self.cell(state) + move, 0), GOAL_CELL)
        return self.encode(cell)

    def is_success(self, state: np.ndarray) -> bool:
        return self.cell(state) == GOAL_CELL

    def goal_params(self, state: np.ndarray) -> np.ndarray:
        # the start cell is the only drawn parameter; report the current cell
        return np.asarray([float(self.cell(state))])

    @staticmethod
    def encode(cell: int) -> np.ndarray:
        return np.asarray([cell / GOAL_CELL], dtype=np.float64)

    @staticmethod
    def cell(state: np.ndarray) -> int:
        return int(round(float(state[0]) * GOAL_CELL))
