import math

import numpy as np
import pytest
import torch
from pydantic import ValidationError

from src.agents.actor import ChunkedActor
from src.agents.policies import ExpertPolicy, RandomPolicy
from src.config.enums import ExecutionMode, ResetMode
from src.envs.chain import ChainEnv
from src.envs.point_reach import PointReachEnv
from src.envs.registry import ENV_IDS, make_env
from src.evaluation.experiments import (
    ConstantChunkActor,
    diversity_experiment,
    upsampling_experiment,
    value_propagation_probe,
)
from src.evaluation.harness import EvalReport, evaluate, trial_seeds


class StillPolicy:
    h = 2

    def act_chunk(self, env, state):
        return np.zeros((self.h, env.spec.action_dim))


@pytest.mark.parametrize("env_id", ENV_IDS)
def test_expert_reaches_high_success_rate(env_id):
    report = evaluate(ExpertPolicy(), make_env(env_id), n_trials=40, seed=0)
    assert report.sr >= 0.95
    assert report.ct is not None and report.ct > 0
    assert report.mode == "IND" and report.n_trials == 40


def test_random_policy_rarely_solves_chain():
    report = evaluate(RandomPolicy(h=1), ChainEnv(), n_trials=40, seed=0)
    assert report.sr <= 0.1


def test_random_policy_is_reseeded_per_trial():
    env = PointReachEnv()
    first = evaluate(RandomPolicy(h=2, seed=1), env, n_trials=5, seed=4)
    second = evaluate(RandomPolicy(h=2, seed=9), env, n_trials=5, seed=4)
    assert first == second


def test_all_failures_report_no_cycle_time():
    report = evaluate(StillPolicy(), PointReachEnv(), n_trials=5, seed=0)
    assert report.successes == 0 and report.sr == 0.0
    assert report.ct is None
    assert '"ct"' not in report.to_line()
    assert all(t.steps == PointReachEnv.spec.max_steps for t in report.trials)


def test_cycle_time_averages_successful_trials_only():
    report = evaluate(ExpertPolicy(), PointReachEnv(), n_trials=10, seed=2)
    successes = [t.steps for t in report.trials if t.success]
    assert report.ct == sum(successes) / len(successes)
    assert report.sr == len(successes) / 10


def test_ood_trials_start_outside_the_training_region():
    env = PointReachEnv()
    report = evaluate(ExpertPolicy(), env, n_trials=10, init_mode=ResetMode.OOD, seed=0)
    assert report.mode == "OOD"
    for trial in report.trials:
        assert env.spec.init_region_ood.contains(trial.init_params)
        assert not env.spec.init_region_ind.contains(trial.init_params)


def test_evaluation_is_reproducible_and_leaves_weights_alone():
    torch.manual_seed(0)
    actor = ChunkedActor(4, 2, 4, low=[-1.0, -1.0], high=[1.0, 1.0], hidden=[8])
    checksum = actor.params().checksum()
    env = PointReachEnv()
    first = evaluate(actor, env, n_trials=4, seed=7)
    second = evaluate(actor, env, n_trials=4, seed=7)
    assert first == second
    assert actor.params().checksum() == checksum
    assert all(t.n_queries == math.ceil(t.steps / 4) for t in first.trials)

    receding = evaluate(actor, env, n_trials=4, seed=7, execution_mode=ExecutionMode.RECEDING_ONE)
    assert all(t.n_queries == t.steps for t in receding.trials)


def test_trial_seeds_are_derived_from_the_evaluation_seed():
    assert trial_seeds(3, 5) == trial_seeds(3, 5)
    assert trial_seeds(3, 5) != trial_seeds(4, 5)
    with pytest.raises(ValueError):
        evaluate(ExpertPolicy(), ChainEnv(), n_trials=0)


def test_eval_report_validates_rates():
    base = dict(env_id="chain-sparse", mode="IND", reset_mode=ResetMode.IND_RANDOM, n_trials=4)
    EvalReport(**base, successes=1, sr=0.25, ct=12.0)
    with pytest.raises(ValidationError):
        EvalReport(**base, successes=1, sr=0.5, ct=12.0)
    with pytest.raises(ValidationError):
        EvalReport(**base, successes=0, sr=0.0, ct=3.0)
    with pytest.raises(ValidationError):
        EvalReport(**base, successes=2, sr=0.5)


def test_constant_chunk_actor():
    actor = ConstantChunkActor([1.0], 3, [-1.0], [1.0])
    chunks = actor(torch.zeros(5, 1, dtype=torch.float64))
    assert chunks.shape == (5, 3, 1)
    assert torch.equal(chunks, torch.ones(5, 3, 1, dtype=torch.float64))


def test_value_propagation_probe_structure(tiny_config):
    config = tiny_config.model_copy(update={"probe_budget": 20, "probe_check_every": 10})
    result = value_propagation_probe(config, horizons=(1, 2))
    assert result.true_value == pytest.approx(config.gamma ** 19, abs=1e-15)
    assert result.threshold == pytest.approx(0.5 * result.true_value, abs=1e-15)
    assert [c.h for c in result.curves] == [1, 2]
    for curve in result.curves:
        assert curve.steps and all(step % 10 == 0 for step in curve.steps)
        assert len(curve.steps) == len(curve.q_start)
        if curve.censored:
            assert curve.steps_to_threshold is None and curve.steps[-1] == 20
        else:
            assert curve.steps_to_threshold == curve.steps[-1]
            assert curve.q_start[-1] >= result.threshold


def test_diversity_experiment_table(tiny_config):
    table = diversity_experiment(tiny_config)
    assert [row.dataset for row in table.rows] == ["fixed", "random"]
    for row in table.rows:
        assert row.drop == row.ood_sr - row.ind_sr
    assert table.averages["drop"] == pytest.approx(sum(r.drop for r in table.rows) / 2)
    assert [r.mode for r in table.reports] == ["IND", "OOD", "IND", "OOD"]
    text = table.to_text()
    assert text.splitlines()[0].split() == ["dataset", "IND", "OOD", "drop"]
    assert len(text.splitlines()) == 4


def test_upsampling_adds_reward_chunks(tiny_config):
    rows = upsampling_experiment(tiny_config, ks=(2, 0))
    assert [row.upsample_k for row in rows] == [2, 0]
    assert rows[0].n_reward_chunks > rows[1].n_reward_chunks > 0
    assert all(np.isfinite(row.td_error_reward_chunks) for row in rows)


# Desk-scale directional checks; run with `pytest -m slow`

@pytest.mark.slow
def test_longer_chunks_propagate_value_faster():
    from src.config.train_config import TrainConfig

    faster = 0
    for seed in range(5):
        result = value_propagation_probe(TrainConfig(seed=seed, n_demos=5), horizons=(1, 4))
        h1, h4 = result.curve(1), result.curve(4)
        if h4.censored:
            continue
        faster += h1.censored or h4.steps_to_threshold < h1.steps_to_threshold
    assert faster >= 4


@pytest.mark.slow
def test_random_init_demos_generalize_better():
    from src.config.train_config import TrainConfig

    smaller_drop = 0
    for seed in range(5):
        table = diversity_experiment(TrainConfig(env_id="point-reach-2d", n_demos=30, seed=seed))
        smaller_drop += table.row("random").drop > table.row("fixed").drop
    assert smaller_drop >= 4


@pytest.mark.slow
def test_reward_upsampling_lowers_reward_chunk_td_error():
    from src.config.train_config import TrainConfig

    lower = 0
    for seed in range(5):
        config = TrainConfig(env_id="grasp-lift-toy", n_demos=30, rl_steps=5000, seed=seed)
        with_k, without = upsampling_experiment(config, ks=(5, 0))
        lower += with_k.td_error_reward_chunks < without.td_error_reward_chunks
    assert lower >= 4
