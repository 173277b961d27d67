import numpy as np
import pytest

from src.config.enums import ResetMode
from src.envs.chain import ChainEnv
from src.envs.exceptions import UnknownEnvironmentError
from src.envs.experts import scripted_expert
from src.envs.grasp_lift import GraspLiftEnv
from src.envs.point_reach import PointReachEnv
from src.envs.recorder import collect_demos, record_episode
from src.envs.registry import ENV_IDS, make_env


def test_registry_lists_all_envs():
    assert ENV_IDS == ["chain-sparse", "grasp-lift-toy", "point-reach-2d"]
    with pytest.raises(UnknownEnvironmentError):
        make_env("nope")


@pytest.mark.parametrize("env_id", ["chain-sparse", "grasp-lift-toy", "point-reach-2d"])
def test_reset_is_seeded(env_id):
    env = make_env(env_id)
    assert np.array_equal(env.reset(5, ResetMode.IND_RANDOM), env.reset(5, ResetMode.IND_RANDOM))


def test_fixed_mode_uses_box_center():
    env = PointReachEnv()
    for seed in range(5):
        assert np.allclose(env.reset(seed, ResetMode.IND_FIXED)[2:], [0.4, 0.4])


def test_random_goals_differ_and_stay_in_region():
    env = PointReachEnv()
    a = env.reset(1, ResetMode.IND_RANDOM)[2:]
    b = env.reset(2, ResetMode.IND_RANDOM)[2:]
    assert not np.array_equal(a, b)
    assert env.spec.init_region_ind.contains(a) and env.spec.init_region_ind.contains(b)


@pytest.mark.parametrize("env_id", ["chain-sparse", "grasp-lift-toy", "point-reach-2d"])
def test_ood_resets_never_land_in_ind(env_id):
    env = make_env(env_id)
    for seed in range(50):
        params = env.goal_params(env.reset(seed, ResetMode.OOD))
        assert env.spec.init_region_ood.contains(params)
        assert not env.spec.init_region_ind.contains(params)


def test_success_state_pays_and_ends():
    env = PointReachEnv()
    env.reset(0, ResetMode.IND_FIXED)
    env._state = np.asarray([0.4, 0.4, 0.4, 0.4])
    result = env.step([1.0, -1.0])
    assert (result.success, result.reward, result.done) == (True, 1.0, True)
    assert np.array_equal(result.next_state, [0.4, 0.4, 0.4, 0.4])


def test_chain_step_right():
    env = ChainEnv()
    env.reset(0, ResetMode.IND_FIXED)
    result = env.step([1.0])
    assert ChainEnv.cell(result.next_state) == 1
    assert result.reward == 0.0 and not result.done
    assert ChainEnv.cell(env.step([0.4]).next_state) == 1
    assert ChainEnv.cell(env.step([-0.5]).next_state) == 0


def test_out_of_bounds_action_is_clamped_and_flagged():
    env = PointReachEnv()
    env.reset(0, ResetMode.IND_FIXED)
    result = env.step([5.0, 0.0])
    assert result.info["clamped"]
    assert np.allclose(result.next_state[:2], [0.1, 0.0])


def test_grasp_lift_hand_trace():
    env = GraspLiftEnv()
    state = env.reset(0, ResetMode.IND_FIXED)
    obj = state[4:7]
    env._state = np.concatenate([obj + [0.0, 0.0, 0.05], [1.0], obj, [0.0]])
    held = env.step([0.0, 0.0, 0.0, 1.0]).next_state
    assert held[7] == 1.0
    for _ in range(5):
        result = env.step([0.0, 0.0, 1.0, 1.0])
        if result.done:
            break
    assert result.success and result.reward == 1.0


def test_timeout_ends_episode_without_reward():
    env = PointReachEnv()
    env.reset(0, ResetMode.IND_FIXED)
    results = [env.step([0.0, 0.0]) for _ in range(env.spec.max_steps)]
    assert results[-1].done and not results[-1].success
    assert all(r.reward == 0.0 for r in results)
    assert not any(r.done for r in results[:-1])


def test_expert_examples():
    env = PointReachEnv()
    action = scripted_expert(env, np.asarray([0.0, 0.0, 0.6, 0.2]))
    assert np.allclose(action, [1.0, 1.0])
    chain = ChainEnv()
    assert scripted_expert(chain, ChainEnv.encode(7)).tolist() == [1.0]
    grasp = GraspLiftEnv()
    above = np.asarray([0.3, 0.3, 0.05, 0.0, 0.3, 0.3, 0.0, 0.0])
    assert scripted_expert(grasp, above).tolist() == [0.0, 0.0, 0.0, 1.0]


@pytest.mark.parametrize("env_id", ["chain-sparse", "grasp-lift-toy", "point-reach-2d"])
def test_expert_competence(env_id):
    env = make_env(env_id)
    successes = sum(record_episode(env, seed, ResetMode.IND_RANDOM).success for seed in range(200))
    assert successes / 200 >= 0.95


@pytest.mark.parametrize("env_id", ["chain-sparse", "grasp-lift-toy", "point-reach-2d"])
def test_same_actions_same_trajectory(env_id):
    env = make_env(env_id)
    actions = np.random.default_rng(0).uniform(-1, 1, size=(15, env.spec.action_dim))
    runs = []
    for _ in range(2):
        env.reset(9, ResetMode.IND_RANDOM)
        runs.append([env.step(a).next_state.tobytes() for a in actions])
    assert runs[0] == runs[1]


def test_upsampling_counts():
    env = PointReachEnv()
    plain = record_episode(env, 3, ResetMode.IND_RANDOM, upsample_k=0)
    upsampled = record_episode(env, 3, ResetMode.IND_RANDOM, upsample_k=5)
    assert sum(s.reward for s in plain.steps) == 1
    assert len(upsampled) == len(plain) + 5
    assert sum(s.reward for s in upsampled.steps) == 6
    assert [s.done for s in upsampled.steps].count(True) == 1 and upsampled.steps[-1].done
    assert all(s.action == [0.0, 0.0] for s in upsampled.steps[-5:])


def test_collect_demos_budget_and_metadata():
    dataset = collect_demos(PointReachEnv(), 30, ResetMode.IND_RANDOM, upsample_k=5, seed=1)
    assert len(dataset.episodes) == 30
    assert dataset.metadata["expert_success_rate"] == 1.0
    assert dataset.metadata["warnings"] == []
    for episode in dataset.episodes:
        assert sum(s.reward for s in episode.steps) in (0, 6)


def test_low_expert_success_is_flagged():
    env = ChainEnv()
    env.spec = env.spec.model_copy(update={"max_steps": 5})
    dataset = collect_demos(env, 4, ResetMode.IND_FIXED, upsample_k=0, seed=0)
    assert dataset.metadata["expert_success_rate"] == 0.0
    assert dataset.metadata["warnings"]
    assert not any(e.success for e in dataset.episodes)
