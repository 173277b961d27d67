from enum import Enum


class InitMode(str, Enum):
    """How the goal/object parameters of a recorded episode were initialized."""

    RANDOM = "random"
    FIXED = "fixed"


class ResetMode(str, Enum):
    """Region an environment reset draws its goal/object parameters from."""

    IND_RANDOM = "IND_random"
    IND_FIXED = "IND_fixed"
    OOD = "OOD"

    @property
    def init_mode(self) -> InitMode:
        return InitMode.FIXED if self is ResetMode.IND_FIXED else InitMode.RANDOM

    @property
    def region(self) -> str:
        return "OOD" if self is ResetMode.OOD else "IND"


class ExecutionMode(str, Enum):
    """How a chunked policy is executed in an environment."""

    OPEN_LOOP_CHUNK = "open_loop_chunk"
    RECEDING_ONE = "receding_one"
