"""Scripted near-optimal controllers standing in for human teleoperation."""
from typing import Callable, Dict

import numpy as np

import src.envs.chain as chain
import src.envs.grasp_lift as grasp_lift
import src.envs.point_reach as point_reach
from src.envs.base import ToyEnv
from src.envs.exceptions import UnknownEnvironmentError


def chain_expert(state: np.ndarray) -> np.ndarray:
    """Shortest path: always step right until the goal cell."""
    if chain.ChainEnv.cell(state) < chain.GOAL_CELL:
        return np.asarray([1.0])
    return np.asarray([0.0])


def point_reach_expert(state: np.ndarray) -> np.ndarray:
    """Proportional velocity toward the goal, clamped to the action box."""
    delta = state[2:] - state[:2]
    return np.clip(delta / point_reach.DT, -1.0, 1.0)


def grasp_lift_expert(state: np.ndarray) -> np.ndarray:
    """Phase machine: approach the grasp point, close the gripper, lift."""
    hand = state[grasp_lift.HAND]
    obj = state[grasp_lift.OBJECT]
    if state[grasp_lift.HELD] > 0.5:
        return np.asarray([0.0, 0.0, 1.0, 1.0])

    grasp_point = obj - grasp_lift.HOLD_OFFSET
    if np.linalg.norm(grasp_point - hand) < 1e-2:
        return np.asarray([0.0, 0.0, 0.0, 1.0])

    velocity = np.clip((grasp_point - hand) / grasp_lift.DT, -1.0, 1.0)
    open_grip = -1.0 if state[grasp_lift.GRIP] > 0.0 else 0.0
    return np.concatenate([velocity, [open_grip]])


EXPERTS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "chain-sparse": chain_expert,
    "point-reach-2d": point_reach_expert,
    "grasp-lift-toy": grasp_lift_expert,
}


def scripted_expert(env: ToyEnv, state: np.ndarray) -> np.ndarray:
    """Deterministic expert action for the given env and state."""
    try:
        expert = EXPERTS[env.spec.env_id]
    except KeyError:
        raise UnknownEnvironmentError(f"No scripted expert for {env.spec.env_id!r}") from None
    return expert(np.asarray(state, dtype=np.float64))
