"""Deep deterministic policy gradient learner for the rudder autopilot."""

from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .env import Observation, WaypointEnv
from .nn import Adam, Mlp

OBS_DIM = 4
DELTA_MAX = math.radians(35.0)


class Transition(NamedTuple):
    s: np.ndarray
    a: float
    r: float
    s_next: np.ndarray
    done: bool


@dataclass(frozen=True)
class DdpgConfig:
    lr: float = 0.0008
    gamma: float = 0.97
    batch: int = 32
    tau: float = 0.02
    noise_sigma: float = 0.0698
    noise_mu: float = 0.0
    update_every: int = 10
    updates_per_cycle: int = 10
    total_steps: int = 1_280_000
    buffer_capacity: int = 100_000
    hidden: tuple[int, ...] = (64, 64)
    warmup_steps: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    actor_final_init: float = 1e-3
    critic_final_init: float = 3e-3
    # L2 weight on the actor's output pre-activation; keeps tanh out of
    # saturation, where the policy gradient vanishes
    preact_penalty: float = 1e-3

    def __post_init__(self):
        for name in ("lr", "gamma", "batch", "tau", "update_every", "updates_per_cycle", "buffer_capacity"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.gamma < 1.0:
            raise ValueError("gamma must be < 1")
        if not self.tau <= 1.0:
            raise ValueError("tau must be <= 1")
        if min(self.noise_sigma, self.total_steps, self.warmup_steps, self.preact_penalty) < 0:
            raise ValueError("noise_sigma, total_steps, warmup_steps and preact_penalty must be >= 0")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))


class ReplayBuffer:
    """Fixed-capacity FIFO store of transitions, sampled uniformly."""

    def __init__(self, capacity: int = 100_000, obs_dim: int = OBS_DIM):
        self.capacity = int(capacity)
        self.s = np.zeros((self.capacity, obs_dim))
        self.a = np.zeros(self.capacity)
        self.r = np.zeros(self.capacity)
        self.s_next = np.zeros((self.capacity, obs_dim))
        self.done = np.zeros(self.capacity, dtype=bool)
        self._next = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, t: Transition) -> None:
        i = self._next
        self.s[i] = t.s
        self.a[i] = t.a
        self.r[i] = t.r
        self.s_next[i] = t.s_next
        self.done[i] = t.done
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def _ordered_index(self) -> np.ndarray:
        start = self._next if self._size == self.capacity else 0
        return (start + np.arange(self._size)) % self.capacity

    def __getitem__(self, k: int) -> Transition:
        """k-th stored transition, oldest first."""
        if not -self._size <= k < self._size:
            raise IndexError(k)
        i = self._ordered_index()[k]
        return Transition(self.s[i].copy(), float(self.a[i]), float(self.r[i]),
                          self.s_next[i].copy(), bool(self.done[i]))

    def sample_indices(self, rng: np.random.Generator, batch: int) -> np.ndarray:
        if self._size < batch:
            raise ValueError(f"cannot sample {batch} from a buffer holding {self._size}")
        return rng.integers(0, self._size, size=batch)

    def sample(self, rng: np.random.Generator, batch: int = 32):
        """Uniform draw with replacement; returns stacked arrays."""
        idx = self.sample_indices(rng, batch)
        # storage slot order == insertion order modulo rotation; uniform either way
        return self.s[idx], self.a[idx], self.r[idx], self.s_next[idx], self.done[idx]


@dataclass(frozen=True)
class ObsNormalizer:
    """Maps raw observations to network inputs: clip, then divide by scale."""

    scale: tuple[float, ...] = (10.0, math.pi, 28.0, 0.25)
    clip: tuple[float, ...] = (10.0, math.pi, 1e9, 1e9)

    def __call__(self, obs) -> np.ndarray:
        x = np.asarray(obs, dtype=float)
        c = np.asarray(self.clip)
        return np.clip(x, -c, c) / np.asarray(self.scale)


def td_target(r, s_next, done, actor_target: Mlp, critic_target: Mlp, gamma: float):
    """y = r + gamma (1 - done) Q'(s', mu'(s')). ``s_next`` is normalized input."""
    r = np.asarray(r, dtype=float)
    done = np.asarray(done, dtype=float)
    s_next = np.atleast_2d(s_next)
    a_next = actor_target.forward(s_next)
    q_next = critic_target.forward(np.hstack([s_next, a_next]))[:, 0]
    return r + gamma * (1.0 - done) * q_next.reshape(r.shape)


def soft_update(target: Mlp, online: Mlp, tau: float) -> None:
    """theta' <- tau theta + (1 - tau) theta', in place."""
    for pt, po in zip(target.params, online.params):
        if pt.shape != po.shape:
            raise ValueError("target and online architectures differ")
        pt *= 1.0 - tau
        pt += tau * po


def critic_loss_and_grads(critic: Mlp, s: np.ndarray, a: np.ndarray, y: np.ndarray):
    """Mean squared Bellman error and its parameter gradients."""
    x = np.hstack([s, np.reshape(a, (-1, 1))])
    with np.errstate(over="ignore", invalid="ignore"):  # blow-ups are reported below
        q, acts = critic.forward(x, keep=True)
        err = q[:, 0] - y
        loss = float(np.mean(err * err))
    if not math.isfinite(loss):
        raise FloatingPointError("non-finite critic loss")
    grads, _ = critic.backward(acts, 2.0 * err / len(err))
    return loss, grads


def actor_loss_and_grads(actor: Mlp, critic: Mlp, s: np.ndarray, preact_penalty: float = 0.0):
    """Objective -mean Q(s, mu(s)) + preact_penalty * mean(z^2).

    z is the actor's output pre-activation. The Q gradient flows through the
    critic's action input.
    """
    n = len(s)
    with np.errstate(over="ignore", invalid="ignore"):
        a, a_acts = actor.forward(s, keep=True)
        q, c_acts = critic.forward(np.hstack([s, a]), keep=True)
        loss = -float(np.mean(q))
        grad_z = None
        if preact_penalty:
            z = actor.output_preactivation(a_acts)
            loss += preact_penalty * float(np.mean(z * z))
            grad_z = 2.0 * preact_penalty * z / n
    if not math.isfinite(loss):
        raise FloatingPointError("non-finite actor objective")
    _, grad_in = critic.backward(c_acts, np.full(n, -1.0 / n))
    grads, _ = actor.backward(a_acts, grad_in[:, s.shape[1]:], grad_z)
    return loss, grads


def explore_action(actor: Mlp, s_norm: np.ndarray, rng: np.random.Generator | None,
                   sigma: float, mu: float = 0.0, delta_max: float = DELTA_MAX) -> float:
    """mu(s) plus Gaussian noise (omitted when sigma == 0 or rng is None), clamped."""
    a = float(actor.forward(s_norm)[0])
    if rng is not None and sigma > 0.0:
        a += mu + sigma * rng.standard_normal()
    return min(max(a, -delta_max), delta_max)


def make_streams(seed: int) -> dict[str, np.random.Generator]:
    """Named, independently seeded RNG streams derived from one master seed."""
    names = ("env", "noise", "init", "sampling")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {n: np.random.Generator(np.random.PCG64(c)) for n, c in zip(names, children)}


def rng_states(streams: dict[str, np.random.Generator]) -> dict:
    """JSON-friendly snapshot of every named stream."""
    return {name: g.bit_generator.state for name, g in streams.items()}


@dataclass
class DdpgAgent:
    """Actor, critic, their targets and optimizers."""

    config: DdpgConfig
    actor: Mlp
    critic: Mlp
    actor_target: Mlp
    critic_target: Mlp
    actor_opt: Adam
    critic_opt: Adam
    normalizer: ObsNormalizer = field(default_factory=ObsNormalizer)
    delta_max: float = DELTA_MAX
    step_count: int = 0

    @classmethod
    def create(cls, config: DdpgConfig, rng: np.random.Generator,
               normalizer: ObsNormalizer | None = None, delta_max: float = DELTA_MAX) -> "DdpgAgent":
        hidden = list(config.hidden)
        actor = Mlp.initialized([OBS_DIM, *hidden, 1], rng, "tanh", delta_max, config.actor_final_init)
        critic = Mlp.initialized([OBS_DIM + 1, *hidden, 1], rng, "linear", 1.0, config.critic_final_init)
        opt = lambda: Adam(config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps)
        return cls(config, actor, critic, actor.copy(), critic.copy(), opt(), opt(),
                   normalizer or ObsNormalizer(), delta_max)

    def is_finite(self) -> bool:
        nets = (self.actor, self.critic, self.actor_target, self.critic_target)
        return all(np.all(np.isfinite(p)) for net in nets for p in net.params)

    def clone(self) -> "DdpgAgent":
        return copy.deepcopy(self)

    def act(self, obs, rng: np.random.Generator | None = None, sigma: float | None = None) -> float:
        """Policy action in radians; noise only when an rng is given."""
        sigma = self.config.noise_sigma if sigma is None else sigma
        return explore_action(self.actor, self.normalizer(obs), rng, sigma,
                              self.config.noise_mu, self.delta_max)

    def update(self, batch) -> tuple[float, float]:
        """One critic step, one actor step and a soft update of both targets."""
        s, a, r, s_next, done = batch
        cfg = self.config
        y = td_target(r, s_next, done, self.actor_target, self.critic_target, cfg.gamma)
        c_loss, c_grads = critic_loss_and_grads(self.critic, s, a, y)
        self.critic_opt.step(self.critic.params, c_grads)
        a_loss, a_grads = actor_loss_and_grads(self.actor, self.critic, s, cfg.preact_penalty)
        self.actor_opt.step(self.actor.params, a_grads)
        soft_update(self.critic_target, self.critic, cfg.tau)
        soft_update(self.actor_target, self.actor, cfg.tau)
        return c_loss, a_loss


@dataclass
class TrainingLog:
    episodes: list[dict] = field(default_factory=list)
    updates: list[dict] = field(default_factory=list)

    def returns(self) -> np.ndarray:
        return np.array([e["return"] for e in self.episodes])


class TrainingDiverged(RuntimeError):
    """Raised on a non-finite loss; ``agent`` is the state at the failure."""

    def __init__(self, message: str, agent: DdpgAgent, log: TrainingLog):
        super().__init__(message)
        self.agent = agent
        self.log = log


def train(
    env: WaypointEnv,
    config: DdpgConfig,
    seed: int = 0,
    agent: DdpgAgent | None = None,
    on_episode: Callable[[dict], None] | None = None,
    on_update: Callable[[dict], None] | None = None,
    on_checkpoint: Callable[[DdpgAgent, int, dict], None] | None = None,
    checkpoint_every: int = 0,
) -> tuple[DdpgAgent, TrainingLog]:
    """Run DDPG for ``config.total_steps`` environment steps.

    Every ``update_every`` steps (once the buffer holds a batch) the agent
    performs ``updates_per_cycle`` critic/actor/target updates. Deterministic
    for a given seed.
    """
    streams = make_streams(seed)
    if agent is None:
        agent = DdpgAgent.create(config, streams["init"], delta_max=env.ship.delta_max)
    buf = ReplayBuffer(config.buffer_capacity)
    log = TrainingLog()
    norm = agent.normalizer
    step = 0
    episode = 0
    while step < config.total_steps:
        obs = env.reset(streams["env"])
        s = norm(obs)
        ep_return = 0.0
        ep_steps = 0
        while True:
            if step < config.warmup_steps:
                a = float(streams["noise"].uniform(-agent.delta_max, agent.delta_max))
            else:
                a = explore_action(agent.actor, s, streams["noise"], config.noise_sigma,
                                   config.noise_mu, agent.delta_max)
            res = env.step(a)
            s_next = norm(res.observation)
            # timeouts are not true terminal states: keep bootstrapping
            terminal = res.outcome in ("success", "missed")
            buf.push(Transition(s, a, res.reward, s_next, terminal))
            ep_return += res.reward
            ep_steps += 1
            step += 1
            agent.step_count = step
            s = s_next
            if step % config.update_every == 0 and len(buf) >= config.batch:
                for _ in range(config.updates_per_cycle):
                    try:
                        c_loss, a_loss = agent.update(buf.sample(streams["sampling"], config.batch))
                    except FloatingPointError as exc:
                        raise TrainingDiverged(str(exc), agent, log) from exc
                    rec = {"step": step, "critic_loss": c_loss, "actor_objective": a_loss}
                    log.updates.append(rec)
                    if on_update:
                        on_update(rec)
            if checkpoint_every and on_checkpoint and step % checkpoint_every == 0:
                on_checkpoint(agent, step, rng_states(streams))
            if res.done or step >= config.total_steps:
                break
        rec = {"episode": episode, "return": ep_return, "steps": ep_steps,
               "outcome": res.outcome if res.done else "truncated"}
        log.episodes.append(rec)
        if on_episode:
            on_episode(rec)
        episode += 1
    return agent, log


def config_dict(config: DdpgConfig) -> dict:
    d = asdict(config)
    d["hidden"] = list(config.hidden)
    return d
