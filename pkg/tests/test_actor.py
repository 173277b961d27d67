import numpy as np
import pytest
import torch
from torch import nn

from src.agents.actor import ChunkedActor, actor_forward, actor_rl_loss, bc_loss
from src.agents.critic import ChunkedCritic
from src.agents.policies import ActorPolicy, ExpertPolicy, RandomPolicy, act
from src.config.enums import ExecutionMode, ResetMode
from src.data.chunks import ChunkBatch
from src.data.exceptions import EmptyBatchError
from src.envs.point_reach import PointReachEnv
from src.neural.autodiff import backward
from src.neural.exceptions import ShapeMismatchError
from src.neural.optim import AdamState, opt_step
from tests.helpers import finite_difference_check, random_chunk_batch


def _zero(module: nn.Module) -> nn.Module:
    with torch.no_grad():
        for p in module.parameters():
            p.zero_()
    return module


def _batch(actions, valid_len, state_dim=1):
    actions = torch.tensor(actions, dtype=torch.float64)
    n, h = actions.shape[:2]
    return ChunkBatch(
        states=torch.zeros(n, h + 1, state_dim, dtype=torch.float64),
        actions=actions,
        rewards=torch.zeros(n, h, dtype=torch.float64),
        done=torch.zeros(n, h, dtype=torch.float64),
        mc_return=torch.zeros(n, dtype=torch.float64),
        valid_len=torch.tensor(valid_len, dtype=torch.long),
    )


class ConstantCritic(nn.Module):
    def __init__(self, value: float, h: int):
        super().__init__()
        self.value = nn.Parameter(torch.tensor(value, dtype=torch.float64))
        self.h = h

    def forward(self, states, chunks):
        return self.value.expand(chunks.shape[0], self.h)


def test_output_shape_and_bounds():
    torch.manual_seed(0)
    actor = ChunkedActor(3, 2, 4, low=[-1.0, 0.0], high=[1.0, 0.5], hidden=[16, 16])
    states = 100.0 * torch.randn(10_000, 3, dtype=torch.float64)
    chunks = actor(states)
    assert chunks.shape == (10_000, 4, 2)
    assert (chunks >= actor.low).all() and (chunks <= actor.high).all()
    assert actor_forward(actor, states[0]).shape == (4, 2)


def test_zero_weights_give_box_center():
    actor = _zero(ChunkedActor(2, 2, 3, low=[-1.0, -1.0], high=[1.0, 1.0], hidden=[8]))
    assert torch.equal(actor(torch.ones(1, 2, dtype=torch.float64)), torch.zeros(1, 3, 2, dtype=torch.float64))


def test_wrong_state_dim_rejected():
    actor = ChunkedActor(2, 1, 2, low=[-1.0], high=[1.0], hidden=[4])
    with pytest.raises(ShapeMismatchError):
        actor(torch.zeros(1, 3, dtype=torch.float64))


def test_actor_matches_straight_line_oracle():
    torch.manual_seed(4)
    actor = ChunkedActor(3, 2, 2, low=[-2.0, -1.0], high=[2.0, 0.0], hidden=[5])
    x = np.random.default_rng(4).normal(size=(4, 3))
    w1, b1 = actor.trunk.net[0].weight.detach().numpy(), actor.trunk.net[0].bias.detach().numpy()
    w2, b2 = actor.trunk.net[2].weight.detach().numpy(), actor.trunk.net[2].bias.detach().numpy()
    raw = (np.maximum(x @ w1.T + b1, 0.0) @ w2.T + b2).reshape(4, 2, 2)
    expected = np.tanh(raw) * np.asarray([2.0, 0.5]) + np.asarray([0.0, -0.5])
    assert np.abs(actor(torch.as_tensor(x)).detach().numpy() - expected).max() < 1e-12


def test_bc_loss_examples():
    actor = _zero(ChunkedActor(1, 1, 1, low=[-1.0], high=[1.0], hidden=[4]))
    out = bc_loss(_batch([[[1.0]]], [1]), actor)
    assert out.value == 1.0 and out.n_valid == 1

    actor4 = _zero(ChunkedActor(1, 1, 4, low=[-1.0], high=[1.0], hidden=[4]))
    out = bc_loss(_batch([[[1.0], [0.5], [0.0], [0.0]]], [2]), actor4)
    assert out.n_valid == 2
    assert out.value == pytest.approx((1.0 + 0.25) / 2, abs=1e-15)


def test_bc_loss_zero_when_matching():
    actor = ChunkedActor(1, 2, 2, low=[-1.0, -1.0], high=[1.0, 1.0], hidden=[4])
    target = actor(torch.zeros(1, 1, dtype=torch.float64)).detach().tolist()
    assert bc_loss(_batch(target, [2]), actor).value == 0.0


def test_bc_loss_rejects_empty_batch():
    actor = ChunkedActor(1, 1, 1, low=[-1.0], high=[1.0], hidden=[4])
    batch = _batch([[[0.0]]], [1])
    empty = ChunkBatch(batch.states, batch.actions, batch.rewards, batch.done, batch.mc_return,
                       torch.zeros(1, dtype=torch.long))
    with pytest.raises(EmptyBatchError):
        bc_loss(empty, actor)


def test_rl_loss_with_constant_critic():
    actor = ChunkedActor(3, 2, 2, low=[-1.0, -1.0], high=[1.0, 1.0], hidden=[8])
    batch = random_chunk_batch(0, h=2)
    out = actor_rl_loss(batch, actor, ConstantCritic(1.5, 2))
    assert out.value == -1.5
    assert backward(out.loss, actor.params()).max_abs() == 0.0


def test_rl_loss_never_reaches_critic():
    torch.manual_seed(1)
    actor = ChunkedActor(3, 2, 2, low=[-1.0, -1.0], high=[1.0, 1.0], hidden=[8])
    critic = ChunkedCritic(3, 2, 2, width=8, n_blocks=1)
    out = actor_rl_loss(random_chunk_batch(1, h=2), actor, critic)
    assert backward(out.loss, critic.params(), retain_graph=True).max_abs() == 0.0
    assert backward(out.loss, actor.params()).max_abs() > 0.0
    assert all(p.requires_grad for p in critic.parameters())


def test_rl_loss_h1_is_policy_gradient_objective():
    torch.manual_seed(2)
    actor = ChunkedActor(3, 2, 1, low=[-1.0, -1.0], high=[1.0, 1.0], hidden=[8])
    critic = ChunkedCritic(3, 2, 1, width=8, n_blocks=1)
    batch = random_chunk_batch(2, h=1)
    states = batch.first_states
    expected = -critic(states, actor(states))[:, 0].mean()
    assert actor_rl_loss(batch, actor, critic).value == pytest.approx(expected.item(), abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_actor_losses_match_finite_differences(seed):
    torch.manual_seed(seed)
    actor = ChunkedActor(3, 2, 3, low=[-1.0, -1.0], high=[1.0, 1.0], hidden=[8])
    critic = ChunkedCritic(3, 2, 3, width=8, n_blocks=1)
    batch = random_chunk_batch(seed, h=3)
    params = actor.params()
    assert finite_difference_check(lambda: bc_loss(batch, actor).loss, params, seed=seed) < 1e-4
    assert finite_difference_check(lambda: actor_rl_loss(batch, actor, critic).loss, params, seed=seed) < 1e-4


def test_bc_fixed_point_on_repeated_chunk():
    torch.manual_seed(0)
    actor = ChunkedActor(1, 2, 2, low=[-1.0, -1.0], high=[1.0, 1.0], hidden=[16])
    target = [[0.3, -0.2], [0.5, 0.1]]
    batch = _batch([target] * 4, [2] * 4)
    params = actor.params()
    optimizer = AdamState(params, 1e-2)
    for _ in range(5000):
        out = bc_loss(batch, actor)
        if out.value < 1e-7:
            break
        opt_step(optimizer, params, backward(out.loss, params))
    assert out.value < 1e-7
    chunk = actor(torch.zeros(1, 1, dtype=torch.float64))[0]
    assert (chunk - torch.tensor(target, dtype=torch.float64)).abs().max().item() < 1e-3


class _StillPolicy:
    def __init__(self, h):
        self.h = h

    def act_chunk(self, env, state):
        return np.zeros((self.h, env.spec.action_dim))


def test_open_loop_queries_once_per_chunk():
    rollout = act(_StillPolicy(4), PointReachEnv(), ExecutionMode.OPEN_LOOP_CHUNK, seed=0, max_steps=10)
    assert rollout.steps == 10
    assert rollout.n_queries == 3


def test_receding_queries_every_step():
    rollout = act(_StillPolicy(4), PointReachEnv(), ExecutionMode.RECEDING_ONE, seed=0, max_steps=10)
    assert rollout.n_queries == rollout.steps == 10


def test_modes_coincide_at_h1():
    env = PointReachEnv()
    a = act(ExpertPolicy(), env, ExecutionMode.OPEN_LOOP_CHUNK, seed=5)
    b = act(ExpertPolicy(), env, ExecutionMode.RECEDING_ONE, seed=5)
    assert a.states == b.states and a.actions == b.actions and a.success and b.success


def test_actor_policy_and_random_policy_are_seeded():
    torch.manual_seed(0)
    actor = ChunkedActor(4, 2, 4, low=[-1.0, -1.0], high=[1.0, 1.0], hidden=[8])
    env = PointReachEnv()
    first = act(ActorPolicy(actor), env, seed=2, reset_mode=ResetMode.OOD)
    again = act(ActorPolicy(actor), env, seed=2, reset_mode=ResetMode.OOD)
    assert first.actions == again.actions
    r1 = act(RandomPolicy(h=2, seed=3), env, seed=1)
    r2 = act(RandomPolicy(h=2, seed=3), env, seed=1)
    assert r1.actions == r2.actions
