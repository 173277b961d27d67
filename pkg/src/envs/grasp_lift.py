"""grasp-lift-toy: reach an object, close the gripper on it and lift it."""
import numpy as np

from src.envs.base import Box, EnvSpec, ToyEnv

DT = 0.1
GRIP_RATE = 0.5
HAND_START = np.asarray([0.0, 0.0, 0.5])
HAND_LOW = np.asarray([-1.0, -1.0, 0.0])
HAND_HIGH = np.asarray([1.0, 1.0, 1.0])
HOLD_OFFSET = np.asarray([0.0, 0.0, -0.05])
GRASP_XY_RADIUS = 0.05
GRASP_Z_GAP = 0.1
GRIP_CLOSED = 0.8
GRIP_RELEASE = 0.5
LIFT_HEIGHT = 0.3

# state layout
HAND = slice(0, 3)
GRIP = 3
OBJECT = slice(4, 7)
HELD = 7


class GraspLiftEnv(ToyEnv):
    """State (hand xyz, grip, object xyz, held); action (velocity xyz, grip delta)."""

    spec = EnvSpec(
        env_id="grasp-lift-toy",
        state_dim=8,
        action_dim=4,
        action_low=[-1.0, -1.0, -1.0, -1.0],
        action_high=[1.0, 1.0, 1.0, 1.0],
        max_steps=50,
        init_region_ind=Box(low=[0.2, 0.2], high=[0.6, 0.6]),
        init_region_ood=Box(low=[0.65, 0.2], high=[0.85, 0.6]),
    )

    def initial_state(self, params: np.ndarray) -> np.ndarray:
        state = np.zeros(8, dtype=np.float64)
        state[HAND] = HAND_START
        state[OBJECT] = [params[0], params[1], 0.0]
        return state

    def transition(self, state: np.ndarray, action: np.ndarray) -> np.ndarray:
        nxt = state.copy()
        nxt[HAND] = np.clip(state[HAND] + DT * action[:3], HAND_LOW, HAND_HIGH)
        nxt[GRIP] = float(np.clip(state[GRIP] + GRIP_RATE * action[3], 0.0, 1.0))
        held = state[HELD] > 0.5

        if held and nxt[GRIP] < GRIP_RELEASE:
            held = False
            nxt[OBJECT.stop - 1] = 0.0
        elif not held and nxt[GRIP] >= GRIP_CLOSED and in_grasp_zone(nxt[HAND], nxt[OBJECT]):
            held = True

        if held:
            nxt[OBJECT] = nxt[HAND] + HOLD_OFFSET
        nxt[HELD] = 1.0 if held else 0.0
        return nxt

    def is_success(self, state: np.ndarray) -> bool:
        return bool(state[HELD] > 0.5 and state[OBJECT][2] > LIFT_HEIGHT)

    def goal_params(self, state: np.ndarray) -> np.ndarray:
        return state[OBJECT][:2].copy()


def in_grasp_zone(hand: np.ndarray, obj: np.ndarray) -> bool:
    gap = hand[2] - obj[2]
    return bool(np.linalg.norm(hand[:2] - obj[:2]) < GRASP_XY_RADIUS and 0.0 <= gap < GRASP_Z_GAP)
