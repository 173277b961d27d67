import numpy as np
import pytest
import torch

from src.data.chunks import ChunkBatch, make_chunks, mc_return_to_go
from src.data.exceptions import EmptyBatchError, EmptyEpisodeError
from src.data.models import ChunkSample, Episode, OfflineDataset, Step
from src.data.sampling import sample_batch, sample_chunk_batch, sample_indices
from tests.helpers import random_episode


def _episode(rewards, action_dim=1):
    steps = [Step(state=[float(t)], action=[float(t + 1)] * action_dim, reward=r, done=t == len(rewards) - 1)
             for t, r in enumerate(rewards)]
    return Episode(env_id="synthetic", steps=steps, success=rewards[-1] > 0)


def test_mc_return_backward_recursion():
    returns = mc_return_to_go(_episode([0, 0, 1, 1]), gamma=0.5)
    assert returns == [0.375, 0.75, 1.5, 1.0]


def test_one_chunk_per_step_with_padding():
    episode = _episode([0, 0, 0, 1, 1])
    chunks = make_chunks(episode, h=3, gamma=0.9)
    assert len(chunks) == 5

    last = chunks[3]
    assert last.valid_len == 2
    assert last.actions == [[4.0], [5.0], [0.0]]
    assert last.rewards == [1.0, 1.0, 0.0]
    assert last.done_mask == [False, True, True]
    assert last.states == [[3.0], [4.0], [4.0], [4.0]]

    first = chunks[0]
    assert first.valid_len == 3
    assert first.done_mask == [False, False, False]
    assert first.states == [[0.0], [1.0], [2.0], [3.0]]


def test_chunk_mc_return_matches_episode():
    episode = _episode([0, 1, 0, 1])
    chunks = make_chunks(episode, h=2, gamma=0.9)
    assert [c.mc_return for c in chunks] == mc_return_to_go(episode, 0.9)


def test_single_step_episode():
    chunks = make_chunks(_episode([1]), h=4, gamma=0.99)
    assert len(chunks) == 1
    assert chunks[0].valid_len == 1
    assert chunks[0].done_mask == [True] * 4


def test_empty_episode_rejected():
    with pytest.raises(EmptyEpisodeError):
        make_chunks(Episode(env_id="synthetic"), h=2, gamma=0.9)


def test_done_only_on_final_step():
    with pytest.raises(ValueError):
        Episode(env_id="x", steps=[Step(state=[0.0], action=[0.0], done=True),
                                   Step(state=[0.0], action=[0.0], done=True)])


def test_padded_chunk_must_be_zeroed():
    with pytest.raises(ValueError):
        ChunkSample(states=[[0.0]] * 3, actions=[[1.0], [1.0]], rewards=[0.0, 0.0],
                    done_mask=[True, True], mc_return=0.0, valid_len=1)


def test_batch_shapes_and_valid_mask():
    rng = np.random.default_rng(0)
    samples = make_chunks(random_episode(rng, 3), h=4, gamma=0.9)
    batch = ChunkBatch.from_samples(samples)
    assert batch.states.shape == (3, 5, 3)
    assert batch.actions.shape == (3, 4, 2)
    assert batch.rewards.shape == (3, 4)
    assert batch.states.dtype == torch.float64
    assert batch.valid_mask.tolist() == [[1, 1, 1, 0], [1, 1, 0, 0], [1, 0, 0, 0]]
    with pytest.raises(EmptyBatchError):
        ChunkBatch.from_samples([])


def test_sampling_is_seeded():
    rng = np.random.default_rng(1)
    dataset = OfflineDataset(env_id="synthetic", state_dim=3, action_dim=2, h=2, gamma=0.9,
                             episodes=[random_episode(rng, 5) for _ in range(3)])
    a = sample_batch(dataset, 6, np.random.default_rng(4))
    b = sample_batch(dataset, 6, np.random.default_rng(4))
    assert a == b
    tensors = sample_chunk_batch(dataset, 6, np.random.default_rng(4))
    assert torch.equal(tensors.actions, ChunkBatch.from_samples(a).actions)
    with pytest.raises(EmptyBatchError):
        sample_indices(10, 0, np.random.default_rng(0))


def test_with_horizon_and_success_filter():
    rng = np.random.default_rng(2)
    dataset = OfflineDataset(env_id="synthetic", state_dim=3, action_dim=2, h=2, gamma=0.9,
                             episodes=[random_episode(rng, 4)])
    assert dataset.with_horizon(3).chunks[0].h == 3
    assert dataset.chunks[0].h == 2
    assert dataset.successful_only().episodes == []


@pytest.mark.parametrize("seed", range(10))
def test_valid_prefixes_rebuild_the_action_sequence(seed):
    rng = np.random.default_rng(seed)
    h = int(rng.integers(1, 6))
    episode = random_episode(rng, int(rng.integers(1, 15)))
    chunks = make_chunks(episode, h, gamma=0.9)
    rebuilt = []
    t = 0
    while t < len(episode):
        chunk = chunks[t]
        rebuilt.extend(chunk.actions[:chunk.valid_len])
        t += chunk.valid_len
    assert rebuilt == [step.action for step in episode.steps]


@pytest.mark.parametrize("seed", range(10))
def test_mc_return_satisfies_bellman_identity(seed):
    rng = np.random.default_rng(seed)
    episode = random_episode(rng, int(rng.integers(2, 30)), reward_p=0.4)
    gamma = float(rng.uniform(0.5, 0.999))
    out = mc_return_to_go(episode, gamma)
    rewards = episode.rewards
    assert out[-1] == rewards[-1]
    for t in range(len(out) - 1):
        assert abs(out[t] - (rewards[t] + gamma * out[t + 1])) <= 1e-12


@pytest.mark.parametrize("length", [1, 2, 7, 20])
def test_terminal_reward_return_is_a_power_of_gamma(length):
    rewards = [0.0] * (length - 1) + [1.0]
    out = mc_return_to_go(_episode(rewards), gamma=0.5)
    last = length - 1
    assert out == [0.5 ** (last - t) for t in range(length)]


@pytest.mark.parametrize("rewards, gamma, expected", [
    ([0, 0, 1], 0.5, [0.25, 0.5, 1.0]),
    ([1, 1], 1.0, [2.0, 1.0]),
])
def test_mc_return_examples(rewards, gamma, expected):
    assert mc_return_to_go(_episode(rewards), gamma) == expected


def test_single_chunk_dataset_repeats_that_chunk():
    dataset = OfflineDataset(env_id="synthetic", state_dim=1, action_dim=1, h=2, gamma=0.9,
                             episodes=[_episode([1])])
    batch = sample_batch(dataset, 4, np.random.default_rng(0))
    assert batch == [dataset.chunks[0]] * 4


def test_sampling_is_uniform_over_chunks():
    rng = np.random.default_rng(5)
    dataset = OfflineDataset(env_id="synthetic", state_dim=3, action_dim=2, h=2, gamma=0.9,
                             episodes=[random_episode(rng, 10)])
    draws = 10_000
    counts = np.bincount(sample_indices(len(dataset.chunks), draws, np.random.default_rng(11)), minlength=10)
    expected = draws / 10
    sigma = np.sqrt(draws * 0.1 * 0.9)
    assert len(counts) == 10
    assert np.all(np.abs(counts - expected) <= 5 * sigma)
