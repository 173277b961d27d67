"""Environment registry keyed by env_id."""
from typing import Dict, List, Type

from src.envs.base import EnvSpec, ToyEnv
from src.envs.chain import ChainEnv
from src.envs.exceptions import UnknownEnvironmentError
from src.envs.grasp_lift import GraspLiftEnv
from src.envs.point_reach import PointReachEnv

ENVIRONMENTS: Dict[str, Type[ToyEnv]] = {
    ChainEnv.spec.env_id: ChainEnv,
    PointReachEnv.spec.env_id: PointReachEnv,
    GraspLiftEnv.spec.env_id: GraspLiftEnv,
}

ENV_IDS: List[str] = sorted(ENVIRONMENTS)


def make_env(env_id: str) -> ToyEnv:
    """Instantiate a fresh environment by its registry id."""
    try:
        return ENVIRONMENTS[env_id]()
    except KeyError:
        raise UnknownEnvironmentError(f"Unknown env_id {env_id!r}; available: {', '.join(ENV_IDS)}") from None


def get_spec(env_id: str) -> EnvSpec:
    return make_env(env_id).spec
