"""Success-rate / cycle-time evaluation over seeded trials."""
import logging
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.agents.actor import ChunkedActor
from src.agents.policies import ActorPolicy, ChunkPolicy, RandomPolicy, act
from src.config.enums import ExecutionMode, ResetMode
from src.envs.base import ToyEnv

logger = logging.getLogger(__name__)


class TrialRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int
    success: bool
    steps: int = Field(..., ge=0, description="Env steps taken")
    n_queries: int = Field(..., ge=0, description="Policy queries made")
    init_params: List[float] = Field(default_factory=list, description="Goal/object parameters of the reset")


class EvalReport(BaseModel):
    """SR and CT of one evaluation; ct is absent when no trial succeeded."""
    model_config = ConfigDict(frozen=True)

    env_id: str
    mode: str = Field(..., description="IND or OOD")
    reset_mode: ResetMode
    n_trials: int = Field(..., ge=1)
    successes: int = Field(..., ge=0)
    sr: float = Field(..., ge=0.0, le=1.0)
    ct: Optional[float] = Field(None, description="Mean env steps over successful trials only")
    seed: int = 0
    execution_mode: ExecutionMode = ExecutionMode.OPEN_LOOP_CHUNK
    run_id: Optional[str] = None
    step: Optional[int] = Field(None, description="Training step of the evaluated checkpoint")
    trials: List[TrialRecord] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_rates(self) -> "EvalReport":
        if self.successes > self.n_trials:
            raise ValueError("more successes than trials")
        if self.sr != self.successes / self.n_trials:
            raise ValueError(f"sr {self.sr} != {self.successes}/{self.n_trials}")
        if (self.ct is None) != (self.successes == 0):
            raise ValueError("ct must be present exactly when at least one trial succeeded")
        return self

    def to_line(self) -> str:
        return self.model_dump_json(exclude_none=True)


def trial_seeds(seed: int, n_trials: int) -> List[int]:
    """Per-trial reset seeds derived from one evaluation seed."""
    return [int(s) for s in np.random.default_rng(seed).integers(0, 2**31 - 1, size=n_trials)]


def evaluate(
    policy: Union[ChunkedActor, ChunkPolicy],
    env: ToyEnv,
    n_trials: int = 40,
    init_mode: ResetMode = ResetMode.IND_RANDOM,
    seed: int = 0,
    execution_mode: ExecutionMode = ExecutionMode.OPEN_LOOP_CHUNK,
) -> EvalReport:
    """
    Run n_trials seeded episodes and summarise them.

    Args:
        policy: A ChunkedActor or any chunk policy (expert, random)
        env: Environment to evaluate in
        n_trials: Number of trials, at least 1
        init_mode: Reset region (IND_random, IND_fixed or OOD)
        seed: Evaluation seed; trial seeds derive from it
        execution_mode: Open-loop chunk or receding single-step execution

    Returns:
        EvalReport with SR = successes / n_trials and CT over successes only
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    init_mode = ResetMode(init_mode)
    if isinstance(policy, ChunkedActor):
        policy = ActorPolicy(policy)

    trials = []
    for trial_seed in trial_seeds(seed, n_trials):
        if isinstance(policy, RandomPolicy):
            policy.reset(trial_seed)
        rollout = act(policy, env, mode=execution_mode, seed=trial_seed, reset_mode=init_mode)
        first_state = np.asarray(rollout.states[0]) if rollout.states else env.state
        trials.append(TrialRecord(
            seed=trial_seed,
            success=rollout.success,
            steps=rollout.steps,
            n_queries=rollout.n_queries,
            init_params=env.goal_params(first_state).tolist(),
        ))

    successes = sum(t.success for t in trials)
    success_steps = [t.steps for t in trials if t.success]
    report = EvalReport(
        env_id=env.spec.env_id,
        mode=init_mode.region,
        reset_mode=init_mode,
        n_trials=n_trials,
        successes=successes,
        sr=successes / n_trials,
        ct=sum(success_steps) / len(success_steps) if success_steps else None,
        seed=seed,
        execution_mode=ExecutionMode(execution_mode),
        trials=trials,
    )
    ct_text = f"{report.ct:.1f}" if report.ct is not None else "n/a"
    logger.info(f"Evaluated {env.spec.env_id} {report.mode}: SR {successes}/{n_trials}, CT {ct_text}")
    return report
