"""Two-stage CO-RFT: behavior cloning, then chunked offline RL from the same demonstrations."""
import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import torch
from pydantic import ValidationError

from src.agents.actor import ChunkedActor, actor_rl_loss, bc_loss
from src.agents.critic import ChunkedCritic, critic_loss
from src.agents.exceptions import NonFiniteLossError
from src.config.enums import ResetMode
from src.config.exceptions import ConfigError
from src.config.train_config import TrainConfig
from src.data.exceptions import DimensionMismatchError
from src.data.models import OfflineDataset
from src.data.sampling import sample_indices
from src.envs.base import EnvSpec
from src.envs.registry import get_spec, make_env
from src.evaluation.harness import EvalReport, evaluate
from src.neural.autodiff import backward
from src.neural.checkpoint import load_checkpoint, save_checkpoint
from src.neural.exceptions import CheckpointError, NonFiniteGradientError
from src.neural.optim import AdamState, ema_update, opt_step
from src.training.exceptions import TrainingAbortedError
from src.training.metrics import MetricRecord, MetricsLog

logger = logging.getLogger(__name__)

BC_STAGE = "bc"
RL_STAGE = "rl"


@dataclass
class EvalEntry:
    """One periodic evaluation of a training checkpoint."""
    step: int
    sr: float
    ct: Optional[float] = None
    path: Optional[Path] = None


@dataclass
class Checkpoint:
    """Networks of one training stage plus what is needed to rebuild them."""
    stage: str
    step: int
    config: TrainConfig
    env_spec: EnvSpec
    actor: ChunkedActor
    critic: Optional[ChunkedCritic] = None
    target_critic: Optional[ChunkedCritic] = None
    path: Optional[Path] = None
    metrics: List[MetricRecord] = field(default_factory=list)
    eval_log: List[EvalEntry] = field(default_factory=list)
    reports: List[EvalReport] = field(default_factory=list)

    def tensors(self) -> Dict[str, Dict[str, torch.Tensor]]:
        groups = {"actor": self.actor.state_dict()}
        if self.critic is not None:
            groups["critic"] = self.critic.state_dict()
        if self.target_critic is not None:
            groups["target_critic"] = self.target_critic.state_dict()
        return groups

    def save(self, path: Union[str, Path]) -> Path:
        meta = {"stage": self.stage, "step": self.step, "env_spec": self.env_spec.model_dump()}
        self.path = save_checkpoint(path, self.tensors(), self.config.model_dump(mode="json"), meta)
        return self.path

    @classmethod
    def load(cls, path: Union[str, Path], expected_hash: Optional[str] = None) -> "Checkpoint":
        data = load_checkpoint(path, expected_hash)
        try:
            config = TrainConfig.from_mapping(data.config)
            env_spec = EnvSpec.model_validate(data.meta["env_spec"])
        except (ConfigError, ValidationError, KeyError) as e:
            raise CheckpointError(f"{path}: invalid stored config or env spec: {e}") from e
        actor = build_actor(config, env_spec)
        critic = target = None
        try:
            actor.load_state_dict(data.tensors["actor"])
            if "critic" in data.tensors:
                critic = build_critic(config, env_spec)
                critic.load_state_dict(data.tensors["critic"])
            if "target_critic" in data.tensors:
                target = build_critic(config, env_spec)
                target.load_state_dict(data.tensors["target_critic"])
        except (KeyError, RuntimeError) as e:
            raise CheckpointError(f"{path}: tensors do not fit the stored config: {e}") from e
        return cls(stage=data.meta["stage"], step=int(data.meta["step"]), config=config, env_spec=env_spec,
                   actor=actor, critic=critic, target_critic=target, path=Path(path))


def build_actor(config: TrainConfig, env_spec: EnvSpec) -> ChunkedActor:
    return ChunkedActor(env_spec.state_dim, env_spec.action_dim, config.h,
                        env_spec.action_low, env_spec.action_high, hidden=config.actor_hidden)


def build_critic(config: TrainConfig, env_spec: EnvSpec) -> ChunkedCritic:
    return ChunkedCritic(env_spec.state_dim, env_spec.action_dim, config.h,
                         width=config.width, n_blocks=config.n_blocks)


def prepare_dataset(dataset: OfflineDataset, config: TrainConfig) -> OfflineDataset:
    """Check the dataset against the configured env and re-chunk it with the configured h."""
    env_spec = dataset_env_spec(dataset)
    config_spec = get_spec(config.env_id)
    if (config_spec.state_dim, config_spec.action_dim) != (dataset.state_dim, dataset.action_dim):
        raise DimensionMismatchError(
            f"dataset {dataset.env_id} has dims {dataset.state_dim}/{dataset.action_dim}, "
            f"config env {config.env_id} expects {config_spec.state_dim}/{config_spec.action_dim}")
    if config.env_id != dataset.env_id:
        logger.warning(f"Config env_id {config.env_id} differs from dataset env_id {dataset.env_id}; "
                       f"using {env_spec.env_id}")
    if not config.keep_failed:
        dataset = dataset.successful_only()
    if dataset.h != config.h or dataset.gamma != config.gamma:
        dataset = OfflineDataset(**{**dataset._field_values(), "h": config.h, "gamma": config.gamma})
    if not dataset.episodes:
        raise DimensionMismatchError("no episodes left to train on")
    return dataset


def check_bc_compatible(bc: Checkpoint, config: TrainConfig, env_spec: EnvSpec) -> None:
    """
    Stage 2 starts from the BC actor, so its architecture must match the config.

    Raises:
        CheckpointError: chunk length, actor layers or env dims differ
    """
    problems = []
    if bc.config.h != config.h:
        problems.append(f"h={bc.config.h} (config h={config.h})")
    if list(bc.config.actor_hidden) != list(config.actor_hidden):
        problems.append(f"actor_hidden={bc.config.actor_hidden} (config {config.actor_hidden})")
    bc_dims = (bc.env_spec.state_dim, bc.env_spec.action_dim)
    if bc_dims != (env_spec.state_dim, env_spec.action_dim):
        problems.append(f"env dims {bc_dims[0]}/{bc_dims[1]} "
                        f"(dataset {env_spec.state_dim}/{env_spec.action_dim})")
    if problems:
        location = bc.path or "BC checkpoint"
        raise CheckpointError(f"{location} does not fit this run: {'; '.join(problems)}")


def dataset_env_spec(dataset: OfflineDataset) -> EnvSpec:
    if dataset.env_spec:
        return EnvSpec.model_validate(dataset.env_spec)
    return get_spec(dataset.env_id)


def _abort(stage: str, step: int, error: Exception, last_good: Checkpoint, out_dir: Optional[Path],
           diagnostics: Dict[str, Any]) -> TrainingAbortedError:
    if out_dir is not None:
        last_good.save(out_dir / "checkpoints" / f"{stage}_last_good.pt")
    logger.error(f"{stage} training diverged at step {step}: {error}; last good step {last_good.step}")
    return TrainingAbortedError(str(error), step=step, last_good=last_good,
                                diagnostics={**diagnostics, **getattr(error, "diagnostics", {})})


def _evaluate_checkpoint(actor: ChunkedActor, dataset: OfflineDataset, config: TrainConfig, step: int) -> EvalReport:
    env = make_env(dataset.env_id)
    report = evaluate(actor, env, n_trials=config.eval_trials, init_mode=ResetMode.IND_RANDOM,
                      seed=config.seed, execution_mode=config.execution_mode)
    return report.model_copy(update={"step": step})


def train_bc(
    dataset: OfflineDataset,
    config: TrainConfig,
    out_dir: Optional[Union[str, Path]] = None,
    evaluate_final: bool = False,
) -> Checkpoint:
    """
    Stage 1: fit a fresh actor to the demonstrations with bc_loss.

    Args:
        dataset: Demonstrations
        config: Hyperparameters (bc_steps, lr_actor, batch_size, seed, ...)
        out_dir: Run directory for metrics.jsonl and checkpoints/bc.pt
        evaluate_final: Also evaluate the final actor IND

    Returns:
        The BC checkpoint

    Raises:
        TrainingAbortedError: loss or gradient became non-finite
    """
    out_dir = Path(out_dir) if out_dir is not None else None
    dataset = prepare_dataset(dataset, config)
    env_spec = dataset_env_spec(dataset)
    metrics = MetricsLog(out_dir / "metrics.jsonl" if out_dir is not None else None)

    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    actor = build_actor(config, env_spec)
    params = actor.params()
    optimizer = AdamState(params, config.lr_actor)
    chunks = dataset.chunk_batch()

    def checkpoint_at(step: int) -> Checkpoint:
        return Checkpoint(stage=BC_STAGE, step=step, config=config, env_spec=env_spec,
                          actor=copy.deepcopy(actor), metrics=metrics.records)

    last_good = checkpoint_at(0)
    logger.info(f"BC: {config.bc_steps} steps on {len(dataset.episodes)} episodes ({len(chunks)} chunks), h={config.h}")
    for step in range(1, config.bc_steps + 1):
        batch = chunks.index(sample_indices(len(chunks), config.batch_size, rng))
        try:
            out = bc_loss(batch, actor)
            grads = backward(out.loss, params)
        except (NonFiniteLossError, NonFiniteGradientError) as e:
            raise _abort(BC_STAGE, step, e, last_good, out_dir, {"batch_id": step}) from e
        opt_step(optimizer, params, grads)

        if step % config.log_every == 0 or step == config.bc_steps:
            metrics.append(MetricRecord(step=step, stage=BC_STAGE, bc_loss=out.value))
            last_good = checkpoint_at(step)
            logger.info(f"BC step {step}/{config.bc_steps}: loss {out.value:.6f}")

    result = checkpoint_at(config.bc_steps)
    if evaluate_final:
        report = _evaluate_checkpoint(actor, dataset, config, config.bc_steps)
        result.reports.append(report)
        result.eval_log.append(EvalEntry(step=config.bc_steps, sr=report.sr, ct=report.ct))
    if out_dir is not None:
        result.save(out_dir / "checkpoints" / "bc.pt")
    return result


def train_offline_rl(
    dataset: OfflineDataset,
    bc_checkpoint: Union[Checkpoint, str, Path],
    config: TrainConfig,
    out_dir: Optional[Union[str, Path]] = None,
    evaluate_during: bool = True,
) -> Checkpoint:
    """
    Stage 2: chunked CalQL from the BC actor with a fresh critic.

    Each step updates the critic on critic_loss; every actor_delay steps the
    actor is updated on actor_rl_loss and the target critic moves toward the
    critic by EMA. Periodic IND evaluations gate which actor is returned.

    Args:
        dataset: The same demonstrations used for BC
        bc_checkpoint: BC Checkpoint or path to its file (never modified)
        config: Hyperparameters
        out_dir: Run directory for metrics.jsonl and checkpoints/
        evaluate_during: Evaluate every eval_every steps and keep the best actor

    Returns:
        Checkpoint holding the best evaluated actor (the final one without
        evaluations), the final critic and target critic

    Raises:
        TrainingAbortedError: a loss or gradient became non-finite
    """
    out_dir = Path(out_dir) if out_dir is not None else None
    dataset = prepare_dataset(dataset, config)
    env_spec = dataset_env_spec(dataset)
    if not isinstance(bc_checkpoint, Checkpoint):
        bc_checkpoint = Checkpoint.load(bc_checkpoint)
    check_bc_compatible(bc_checkpoint, config, env_spec)
    metrics =MetricsLog(out_dir / "metrics.jsonl" if out_dir is not None else None)

    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    generator = torch.Generator().manual_seed(config.seed)

    actor = build_actor(config, env_spec)
    actor.load_state_dict(bc_checkpoint.actor.state_dict())
    critic = build_critic(config, env_spec)
    target_critic = copy.deepcopy(critic)
    actor_params, critic_params, target_params = actor.params(), critic.params(), target_critic.params()
    actor_opt = AdamState(actor_params, config.lr_actor)
    critic_opt = AdamState(critic_params, config.lr_critic)
    chunks = dataset.chunk_batch()

    def checkpoint_at(step: int) -> Checkpoint:
        return Checkpoint(stage=RL_STAGE, step=step, config=config, env_spec=env_spec,
                          actor=copy.deepcopy(actor), critic=copy.deepcopy(critic),
                          target_critic=copy.deepcopy(target_critic), metrics=metrics.records)

    eval_log: List[EvalEntry] = []
    reports: List[EvalReport] = []
    retained: Dict[int, Checkpoint] = {}

    def run_eval(step: int) -> None:
        report = _evaluate_checkpoint(actor, dataset, config, step)
        reports.append(report)
        snapshot = checkpoint_at(step)
        path = None
        if out_dir is not None:
            path = snapshot.save(out_dir / "checkpoints" / f"rl_step{step:07d}.pt")
        eval_log.append(EvalEntry(step=step, sr=report.sr, ct=report.ct, path=path))
        retained[step] = snapshot
        metrics.append(MetricRecord(step=step, stage=RL_STAGE, sr=report.sr, ct=report.ct))

    if evaluate_during and config.rl_steps > 0:
        run_eval(0)

    last_good = checkpoint_at(0)
    logger.info(f"RL: {config.rl_steps} steps, alpha={config.alpha}, h={config.h}, actor_delay={config.actor_delay}")
    actor_value = None
    for step in range(1, config.rl_steps + 1):
        indices = sample_indices(len(chunks), config.batch_size, rng)
        batch = chunks.index(indices)
        try:
            c_out = critic_loss(batch, critic, target_critic, actor, config.gamma, config.alpha,
                                noise_scale=config.noise_scale, n_ood=config.n_ood, generator=generator,
                                target_noise=config.target_noise, target_noise_clip=config.target_noise_clip)
            opt_step(critic_opt, critic_params, backward(c_out.loss, critic_params))

            if step % config.actor_delay == 0:
                a_out = actor_rl_loss(batch, actor, critic)
                opt_step(actor_opt, actor_params, backward(a_out.loss, actor_params))
                ema_update(target_params, critic_params, config.tau)
                actor_value = a_out.value
        except (NonFiniteLossError, NonFiniteGradientError) as e:
            raise _abort(RL_STAGE, step, e, last_good, out_dir,
                         {"batch_id": step, "batch_indices": indices[:8].tolist()}) from e

        if step % config.log_every == 0 or step == config.rl_steps:
            metrics.append(MetricRecord(
                step=step, stage=RL_STAGE, td_error=c_out.td_loss, q_data_mean=c_out.q_data_mean,
                q_ood_mean=c_out.q_ood_mean, regularizer=c_out.regularizer, actor_loss=actor_value,
            ))
            last_good = checkpoint_at(step)
            logger.info(f"RL step {step}/{config.rl_steps}: td {c_out.td_loss:.6f}, "
                        f"Q data {c_out.q_data_mean:.4f}, Q ood {c_out.q_ood_mean:.4f}, reg {c_out.regularizer:.4f}")
        if evaluate_during and (step % config.eval_every == 0 or step == config.rl_steps):
            run_eval(step)

    final = checkpoint_at(config.rl_steps)
    final.eval_log, final.reports = eval_log, reports
    if config.rl_steps == 0:
        final.actor = copy.deepcopy(bc_checkpoint.actor)

    rl_entries = [entry for entry in eval_log if entry.step > 0]
    if rl_entries:
        best = rl_entries[select_best_checkpoint(rl_entries)]
        final.actor = retained[best.step].actor
        final.step = best.step
        logger.info(f"Best RL checkpoint: step {best.step}, SR {best.sr:.3f}")
    if out_dir is not None:
        final.save(out_dir / "checkpoints" / "best.pt")
    return final


def select_best_checkpoint(eval_log: Sequence[Union[EvalEntry, Dict[str, Any]]]) -> int:
    """
    Index of the best evaluation: highest SR, then lower CT, then earlier step.

    A missing CT ranks after any measured one.

    Raises:
        ValueError: empty log
    """
    if not eval_log:
        raise ValueError("select_best_checkpoint needs at least one evaluation entry")
    entries = [EvalEntry(**e) if isinstance(e, dict) else e for e in eval_log]

    def rank(index: int):
        entry = entries[index]
        ct = entry.ct if entry.ct is not None else float("inf")
        return (-entry.sr, ct, entry.step, index)

    return min(range(len(entries)), key=rank)
