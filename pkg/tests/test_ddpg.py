import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kcsnav.ddpg import (
    DdpgAgent, DdpgConfig, ObsNormalizer, ReplayBuffer, Transition, actor_loss_and_grads,
    critic_loss_and_grads, explore_action, make_streams, soft_update, td_target, train,
)
from kcsnav.env import EpisodeConfig, WaypointEnv
from kcsnav.nn import Mlp

from gradcheck import max_rel_error

DMAX = math.radians(35.0)


def _t(i):
    return Transition(np.full(4, float(i)), 0.0, float(i), np.zeros(4), False)


def test_config_defaults_match_hyperparameters():
    c = DdpgConfig()
    assert (c.lr, c.gamma, c.batch, c.tau, c.noise_sigma, c.noise_mu) == (0.0008, 0.97, 32, 0.02, 0.0698, 0.0)
    assert (c.update_every, c.total_steps, c.buffer_capacity) == (10, 1_280_000, 100_000)
    with pytest.raises(ValueError):
        DdpgConfig(gamma=1.0)
    with pytest.raises(ValueError):
        DdpgConfig(batch=0)


def test_replay_fifo_at_capacity():
    buf = ReplayBuffer(100_000)
    for i in range(1, 100_002):
        buf.push(_t(i))
    assert len(buf) == 100_000
    assert buf[0].r == 2.0 and buf[-1].r == 100_001.0
    stored = set(buf.r.tolist())
    assert 1.0 not in stored and 2.0 in stored


@given(st.integers(1, 20), st.integers(0, 60))
def test_replay_size_and_order(cap, n):
    buf = ReplayBuffer(cap)
    for i in range(n):
        buf.push(_t(i))
    assert len(buf) == min(n, cap)
    assert [buf[k].r for k in range(len(buf))] == [float(i) for i in range(max(0, n - cap), n)]


def test_replay_sampling():
    buf = ReplayBuffer(100)
    for i in range(50):
        buf.push(_t(i))
    s, a, r, s2, d = buf.sample(np.random.default_rng(3), 32)
    assert s.shape == (32, 4) and r.shape == (32,)
    i1 = buf.sample_indices(np.random.default_rng(7), 32)
    i2 = buf.sample_indices(np.random.default_rng(7), 32)
    np.testing.assert_array_equal(i1, i2)
    with pytest.raises(ValueError):
        ReplayBuffer(10).sample(np.random.default_rng(0), 32)


def _nets(seed=0):
    rng = np.random.default_rng(seed)
    actor = Mlp.initialized([4, 8, 8, 1], rng, "tanh", DMAX, final_init=0.5)
    critic = Mlp.initialized([5, 8, 8, 1], rng, "linear", 1.0, final_init=0.5)
    return actor, critic, rng


def test_td_target_examples():
    class Const:
        def __init__(self, v): self.v = v
        def forward(self, x): return np.full((len(np.atleast_2d(x)), 1), self.v)

    s2 = np.zeros((1, 4))
    assert td_target([1.0], s2, [True], Const(0.0), Const(2.0), 0.97)[0] == 1.0
    assert td_target([1.0], s2, [False], Const(0.0), Const(2.0), 0.0)[0] == 1.0
    assert td_target([1.0], s2, [False], Const(0.0), Const(2.0), 0.97)[0] == pytest.approx(2.94)


def test_soft_update_examples():
    a = Mlp([1, 1], params=[np.ones((1, 1)), np.ones(1)])
    t = Mlp([1, 1])
    soft_update(t, a, 0.02)
    assert t.params[0][0, 0] == pytest.approx(0.02)
    t2 = Mlp([1, 1])
    soft_update(t2, a, 0.0)
    assert t2.params[0][0, 0] == 0.0
    soft_update(t2, a, 1.0)
    assert t2.params[0][0, 0] == 1.0


@pytest.mark.parametrize("seed", range(10))
def test_critic_gradient(seed):
    _, critic, rng = _nets(seed)
    s = rng.normal(size=(16, 4))
    a = rng.uniform(-DMAX, DMAX, size=16)
    y = rng.normal(size=16)
    _, grads = critic_loss_and_grads(critic, s, a, y)
    err = max_rel_error(lambda: critic_loss_and_grads(critic, s, a, y)[0], critic.params, grads)
    assert err <= 1e-4


@pytest.mark.parametrize("seed", range(10))
def test_actor_gradient(seed):
    actor, critic, rng = _nets(seed)
    s = rng.normal(size=(16, 4))
    _, grads = actor_loss_and_grads(actor, critic, s)
    err = max_rel_error(lambda: actor_loss_and_grads(actor, critic, s)[0], actor.params, grads)
    assert err <= 1e-4


def test_actor_gradient_through_linear_critic():
    """Critic Q = c*a: the actor objective gradient is -c * mean d(mu)/d(theta)."""
    actor, _, rng = _nets(1)
    c = 0.7
    W = np.zeros((5, 1))
    W[4, 0] = c
    critic = Mlp([5, 1], "linear", params=[W, np.zeros(1)])
    s = rng.normal(size=(8, 4))
    _, grads = actor_loss_and_grads(actor, critic, s)
    _, acts = actor.forward(s, keep=True)
    chain, _ = actor.backward(acts, np.full(8, -c / 8))
    for g1, g2 in zip(grads, chain):
        np.testing.assert_allclose(g1, g2, rtol=1e-13, atol=1e-16)


def test_critic_loss_decreases_on_fixed_batch():
    _, critic, rng = _nets(4)
    from kcsnav.nn import Adam
    s = rng.normal(size=(32, 4))
    a = rng.uniform(-DMAX, DMAX, 32)
    y = rng.normal(size=32)
    opt = Adam(lr=0.0008)
    losses = []
    for _ in range(50):
        loss, g = critic_loss_and_grads(critic, s, a, y)
        losses.append(loss)
        opt.step(critic.params, g)
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_non_finite_loss_detected():
    _, critic, _ = _nets(0)
    with pytest.raises(FloatingPointError):
        critic_loss_and_grads(critic, np.zeros((2, 4)), np.zeros(2), np.array([np.nan, 0.0]))


def test_exploration_noise_statistics():
    actor = Mlp([4, 1], "tanh", DMAX)  # mu(s) = 0
    rng = np.random.default_rng(0)
    s = np.zeros(4)
    a = np.array([explore_action(actor, s, rng, 0.0698) for _ in range(100_000)])
    assert abs(a.mean()) < 3 * 0.0698 / math.sqrt(len(a))
    assert a.std() == pytest.approx(0.0698, rel=0.02)
    assert explore_action(actor, s, rng, 0.0) == 0.0
    big = np.array([explore_action(actor, s, rng, 5.0) for _ in range(2000)])
    assert np.all(np.abs(big) <= DMAX)


def test_agent_initial_targets_equal_online_and_deterministic_policy():
    agent = DdpgAgent.create(DdpgConfig(), np.random.default_rng(0))
    for a, b in zip(agent.actor.params + agent.critic.params,
                    agent.actor_target.params + agent.critic_target.params):
        np.testing.assert_array_equal(a, b)
    obs = (1.0, 0.2, 12.0, 0.01)
    assert agent.act(obs) == agent.act(obs)


def test_normalizer_clips_and_scales():
    n = ObsNormalizer()
    np.testing.assert_allclose(n((25.0, -math.pi, 28.0, 0.25)), (1.0, -1.0, 1.0, 1.0))


def test_streams_independent():
    a, b = make_streams(5), make_streams(5)
    assert a["env"].random() == b["env"].random()
    assert make_streams(5)["noise"].random() != make_streams(5)["env"].random()


def test_train_zero_steps_returns_initial_networks():
    env = WaypointEnv()
    agent, log = train(env, DdpgConfig(total_steps=0), seed=3)
    fresh = DdpgAgent.create(DdpgConfig(total_steps=0), make_streams(3)["init"])
    for p, q in zip(agent.actor.params, fresh.actor.params):
        np.testing.assert_array_equal(p, q)
    assert log.episodes == [] and log.updates == []


def test_training_log_consistency():
    env = WaypointEnv(EpisodeConfig(max_steps=40))
    steps_seen = []
    agent, log = train(env, DdpgConfig(total_steps=300, update_every=10, updates_per_cycle=2),
                       seed=1, on_update=lambda r: steps_seen.append(r["step"]))
    assert sum(e["steps"] for e in log.episodes) == 300
    assert steps_seen == sorted(steps_seen)
    assert len(log.updates) == 2 * len({u["step"] for u in log.updates})
    assert log.updates[0]["step"] == 40  # first cycle with a full batch
    assert agent.step_count == 300


@pytest.mark.parametrize("seed", range(10))
def test_actor_gradient_with_preactivation_penalty(seed):
    actor, critic, rng = _nets(seed)
    s = rng.normal(size=(16, 4))
    _, grads = actor_loss_and_grads(actor, critic, s, 0.05)
    err = max_rel_error(lambda: actor_loss_and_grads(actor, critic, s, 0.05)[0], actor.params, grads)
    assert err <= 1e-4


def test_penalty_pulls_saturated_actor_back():
    """With tanh saturated the Q gradient vanishes; the penalty still moves the output."""
    actor, critic, rng = _nets(0)
    actor.params[-1][:] = -25.0  # drive the output deep into saturation
    s = rng.normal(size=(32, 4))
    from kcsnav.nn import Adam
    opt = Adam(lr=0.0008)
    z0 = float(np.mean(actor.output_preactivation(actor.forward(s, keep=True)[1])))
    for _ in range(200):
        _, g = actor_loss_and_grads(actor, critic, s, 1e-3)
        opt.step(actor.params, g)
    z1 = float(np.mean(actor.output_preactivation(actor.forward(s, keep=True)[1])))
    assert z1 > z0 + 0.1
