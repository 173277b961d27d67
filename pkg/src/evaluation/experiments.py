"""Desk-scale experiments: data diversity, value propagation and Reward Upsampling."""
import copy
import logging
from typing import Dict, List, Optional, Sequence

import numpy as np
import torch
from pydantic import BaseModel, Field
from torch import nn

from src.agents.critic import ChunkedCritic, chunked_td_targets, critic_loss
from src.config.enums import ResetMode
from src.config.train_config import TrainConfig
from src.data.chunks import ChunkBatch
from src.data.models import OfflineDataset
from src.data.sampling import sample_indices
from src.envs.chain import GOAL_CELL, ChainEnv
from src.envs.recorder import collect_demos
from src.envs.registry import make_env
from src.evaluation.harness import EvalReport, evaluate
from src.neural.autodiff import backward
from src.neural.optim import AdamState, ema_update, opt_step
from src.training.pipeline import build_critic, dataset_env_spec, train_bc, train_offline_rl

logger = logging.getLogger(__name__)

CHAIN_ENV_ID = ChainEnv.spec.env_id
GRASP_ENV_ID = "grasp-lift-toy"


# Data diversity

class DiversityRow(BaseModel):
    dataset: str = Field(..., description="fixed or random initialization of the training demos")
    ind_sr: float
    ood_sr: float
    drop: float = Field(..., description="ood_sr - ind_sr (negative when OOD is worse)")


class DiversityTable(BaseModel):
    env_id: str
    seed: int
    rows: List[DiversityRow]
    reports: List[EvalReport] = Field(default_factory=list)

    @property
    def averages(self) -> Dict[str, float]:
        n = len(self.rows)
        return {
            "ind_sr": sum(r.ind_sr for r in self.rows) / n,
            "ood_sr": sum(r.ood_sr for r in self.rows) / n,
            "drop": sum(r.drop for r in self.rows) / n,
        }

    def row(self, dataset: str) -> DiversityRow:
        return next(r for r in self.rows if r.dataset == dataset)

    def to_text(self) -> str:
        lines = [f"{'dataset':<10}{'IND':>8}{'OOD':>8}{'drop':>9}"]
        for r in self.rows:
            lines.append(f"{r.dataset:<10}{r.ind_sr:>8.3f}{r.ood_sr:>8.3f}{r.drop:>+9.3f}")
        avg = self.averages
        lines.append(f"{'average':<10}{avg['ind_sr']:>8.3f}{avg['ood_sr']:>8.3f}{avg['drop']:>+9.3f}")
        return "\n".join(lines) + "\n"


def diversity_experiment(config: TrainConfig) -> DiversityTable:
    """
    Train CO-RFT on fixed-init and random-init demos of equal size and evaluate both IND and OOD.

    Args:
        config: Hyperparameters; env_id, n_demos, upsample_k and seed select the data

    Returns:
        Table with one row per dataset and the IND -> OOD drop
    """
    env = make_env(config.env_id)
    rows, reports = [], []
    for name, reset_mode in (("fixed", ResetMode.IND_FIXED), ("random", ResetMode.IND_RANDOM)):
        dataset = collect_demos(env, config.n_demos, reset_mode, config.upsample_k,
                                seed=config.seed, h=config.h, gamma=config.gamma)
        bc = train_bc(dataset, config)
        trained = train_offline_rl(dataset, bc, config)
        ind = evaluate(trained.actor, env, config.eval_trials, ResetMode.IND_RANDOM,
                       seed=config.seed + 1, execution_mode=config.execution_mode)
        ood = evaluate(trained.actor, env, config.eval_trials, ResetMode.OOD,
                       seed=config.seed + 1, execution_mode=config.execution_mode)
        reports.extend([ind, ood])
        rows.append(DiversityRow(dataset=name, ind_sr=ind.sr, ood_sr=ood.sr, drop=ood.sr - ind.sr))
        logger.info(f"Diversity [{name}]: IND {ind.sr:.3f}, OOD {ood.sr:.3f}")
    return DiversityTable(env_id=config.env_id, seed=config.seed, rows=rows, reports=reports)


# Value propagation

class ConstantChunkActor(nn.Module):
    """Emits the same chunk for every state; a fixed bootstrap policy for critic-only training."""

    low: torch.Tensor
    high: torch.Tensor

    def __init__(self, action: Sequence[float], h: int, low: Sequence[float], high: Sequence[float]):
        super().__init__()
        self.h = h
        self.action_dim = len(action)
        self.register_buffer("chunk", torch.tensor([list(action)] * h, dtype=torch.float64))
        self.register_buffer("low", torch.tensor(list(low), dtype=torch.float64))
        self.register_buffer("high", torch.tensor(list(high), dtype=torch.float64))

    def forward(self, states: torch.Tensor) -> torch.Tensor:
        return self.chunk.expand(*states.shape[:-1], self.h, self.action_dim)


class ProbeCurve(BaseModel):
    h: int
    steps_to_threshold: Optional[int] = Field(None, description="Gradient steps until Q(start) crossed the threshold")
    censored: bool = Field(..., description="Threshold not reached within the budget")
    steps: List[int] = Field(default_factory=list)
    q_start: List[float] = Field(default_factory=list)


class ProbeResult(BaseModel):
    seed: int
    gamma: float
    true_value: float
    threshold: float
    curves: List[ProbeCurve]

    def curve(self, h: int) -> ProbeCurve:
        return next(c for c in self.curves if c.h == h)


def train_probe_critic(dataset: OfflineDataset, config: TrainConfig, h: int, threshold: float,
                       start_state: np.ndarray) -> ProbeCurve:
    """Pure chunked TD (alpha = 0) under the always-right policy until Q(start, right^h) >= threshold."""
    dataset = dataset.with_horizon(h)
    env_spec = dataset_env_spec(dataset)
    probe_config = config.model_copy(update={"h": h})
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    generator = torch.Generator().manual_seed(config.seed)

    actor = ConstantChunkActor([1.0], h, env_spec.action_low, env_spec.action_high)
    critic = build_critic(probe_config, env_spec)
    target = copy.deepcopy(critic)
    params, target_params = critic.params(), target.params()
    optimizer = AdamState(params, config.lr_critic)
    chunks = dataset.chunk_batch()
    start = torch.as_tensor(start_state, dtype=torch.float64).unsqueeze(0)
    right = actor(start)

    curve = ProbeCurve(h=h, censored=True)
    for step in range(1, config.probe_budget + 1):
        batch = chunks.index(sample_indices(len(chunks), config.batch_size, rng))
        out = critic_loss(batch, critic, target, actor, config.gamma, alpha=0.0,
                          noise_scale=config.noise_scale, n_ood=config.n_ood, generator=generator)
        opt_step(optimizer, params, backward(out.loss, params))
        ema_update(target_params, params, config.tau)

        if step % config.probe_check_every == 0:
            with torch.no_grad():
                q = float(critic(start, right)[0, -1])
            curve.steps.append(step)
            curve.q_start.append(q)
            if q >= threshold:
                curve.steps_to_threshold = step
                curve.censored = False
                break
    logger.info(f"Probe h={h}: " + (f"threshold at step {curve.steps_to_threshold}" if not curve.censored
                                     else f"censored after {config.probe_budget} steps"))
    return curve


def value_propagation_probe(config: TrainConfig, horizons: Sequence[int] = (1, 2, 4),
                            dataset: Optional[OfflineDataset] = None) -> ProbeResult:
    """
    Gradient steps until Q at the chain start reaches half its true discounted value, per chunk length.

    All horizons train on the same demonstrations (collected without upsampling
    so the start value is gamma ** distance). Non-convergence is recorded as
    censored.
    """
    env = make_env(CHAIN_ENV_ID)
    if dataset is None:
        dataset = collect_demos(env, config.n_demos, ResetMode.IND_FIXED, upsample_k=0,
                                seed=config.seed, h=max(horizons), gamma=config.gamma)
    start_state = np.asarray(dataset.episodes[0].steps[0].state)
    distance = GOAL_CELL - ChainEnv.cell(start_state)
    true_value = config.gamma ** distance
    threshold = 0.5 * true_value

    curves = [train_probe_critic(dataset, config, h, threshold, start_state) for h in horizons]
    return ProbeResult(seed=config.seed, gamma=config.gamma, true_value=true_value,
                       threshold=threshold, curves=curves)


# Reward Upsampling

class UpsamplingRow(BaseModel):
    upsample_k: int
    td_error_reward_chunks: float
    n_reward_chunks: int


def reward_chunk_td_error(batch: ChunkBatch, critic: ChunkedCritic, target_critic: ChunkedCritic,
                          actor: nn.Module, gamma: float) -> float:
    """Mean squared TD error restricted to chunks that carry a reward."""
    mask = batch.rewards.sum(dim=1) > 0
    if not bool(mask.any()):
        return float("nan")
    reward_batch = batch.index(torch.nonzero(mask).squeeze(1))
    with torch.no_grad():
        targets = chunked_td_targets(reward_batch, target_critic, actor, gamma)
        q = critic(reward_batch.first_states, reward_batch.actions)
    return float(((q - targets) ** 2).mean())


def upsampling_experiment(config: TrainConfig, ks: Sequence[int] = (5, 0)) -> List[UpsamplingRow]:
    """CO-RFT on grasp-lift demos recorded with each upsample_k; TD error on reward-bearing chunks after training."""
    env = make_env(GRASP_ENV_ID)
    run_config = config.model_copy(update={"env_id": GRASP_ENV_ID})
    rows = []
    for k in ks:
        dataset = collect_demos(env, config.n_demos, ResetMode.IND_RANDOM, upsample_k=k,
                                seed=config.seed, h=config.h, gamma=config.gamma)
        bc = train_bc(dataset, run_config)
        trained = train_offline_rl(dataset, bc, run_config, evaluate_during=False)
        batch = dataset.chunk_batch()
        error = reward_chunk_td_error(batch, trained.critic, trained.target_critic, trained.actor, config.gamma)
        n_reward = int((batch.rewards.sum(dim=1) > 0).sum())
        rows.append(UpsamplingRow(upsample_k=k, td_error_reward_chunks=error, n_reward_chunks=n_reward))
        logger.info(f"Upsampling k={k}: TD error on {n_reward} reward chunks {error:.6f}")
    return rows
