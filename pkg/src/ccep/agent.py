"""Multi-style actor-critic training.

Twin Q networks (optionally trained toward sign-flipped targets by negating
one network's output) expose four styled value estimators: each raw critic,
their maximum (radical) and their minimum (conservative).  A single actor
network conditioned on a one-hot style label learns against all styles at
once; exploration samples a style uniformly at every step, so experience
from every style trains the shared networks.

Variants sharing this code path:
  ccep           four styles, opposite targets, centralized actor
  ccep-separate  one independent actor network per style (no sharing)
  td3            one style, no negation: standard twin-critic baseline
  ddpg           single critic, no target smoothing, no policy delay
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .envs import EnvSpec
from .nets import (
    AdamState,
    NetConfig,
    NetworkParams,
    adam_step,
    backward,
    forward,
    init_params,
    soft_update,
)
from .replay import ReplayBuffer, Transition, TransitionBatch

ALGORITHMS = ("ccep", "ccep-separate", "td3", "ddpg")

MAX_STYLES = 4  # two raw critics plus their max and min


@dataclass(frozen=True)
class CcepConfig:
    """Training hyperparameters (defaults follow the TD3-lineage settings)."""

    algorithm: str = "ccep"
    num_styles: int = 4
    hidden_sizes: tuple[int, ...] = (256, 256)
    lr_actor: float = 3e-4
    lr_critic: float = 3e-4
    batch_size: int = 256
    gamma: float = 0.99
    tau: float = 5e-3
    policy_delay: int = 2
    target_noise: float = 0.2
    noise_clip: float = 0.5
    exploration_noise: float = 0.1
    warmup_steps: int = 25_000
    buffer_capacity: int = 1_000_000
    total_steps: int = 100_000
    seed: int = 0
    # None picks the per-algorithm default: on for ccep/ccep-separate,
    # off for td3/ddpg.  Set explicitly to compare same vs opposite targets.
    opposite_targets: bool | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if not 1 <= self.num_styles <= MAX_STYLES:
            raise ValueError(f"num_styles must be in [1, {MAX_STYLES}]")
        if not self.hidden_sizes or any(h < 1 for h in self.hidden_sizes):
            raise ValueError("hidden_sizes must be positive")
        for name in ("lr_actor", "lr_critic", "target_noise", "noise_clip",
                     "exploration_noise"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("batch_size", "buffer_capacity", "total_steps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.warmup_steps < 0:
            raise ValueError("warmup_steps must be >= 0")
        if self.policy_delay < 1:
            raise ValueError("policy_delay must be >= 1")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must be in (0, 1], got {self.tau}")
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))

    def resolved(self) -> "CcepConfig":
        """Effective config with per-algorithm overrides applied."""
        changes = {}
        if self.algorithm in ("td3", "ddpg"):
            changes["num_styles"] = 1
            if self.opposite_targets is None:
                changes["opposite_targets"] = False
        else:
            if self.opposite_targets is None:
                changes["opposite_targets"] = True
        if self.algorithm == "ddpg":
            changes["opposite_targets"] = False  # single critic: nothing to negate
            changes["policy_delay"] = 1
            changes["target_noise"] = 0.0
        return dataclasses.replace(self, **changes) if changes else self


def one_hot(z: int, k: int) -> np.ndarray:
    """Length-k indicator vector for style z."""
    if not 0 <= z < k:
        raise ValueError(f"style {z} out of range [0, {k})")
    v = np.zeros(k)
    v[z] = 1.0
    return v


def one_hot_batch(zs: np.ndarray, k: int) -> np.ndarray:
    zs = np.asarray(zs, dtype=np.int64)
    if zs.size and (zs.min() < 0 or zs.max() >= k):
        raise ValueError("style index out of range")
    return np.eye(k)[zs]


class CriticEnsemble:
    """Two Q networks over concat(s, a), with target copies.

    When negate_second is set, the second network's usable value is the
    negative of its raw forward output, so regressing both post-negation
    outputs toward a shared target makes the raw networks learn
    sign-opposite functions.  `twin=False` drops the second network
    entirely (DDPG)."""

    def __init__(self, obs_dim: int, act_dim: int, hidden_sizes, negate_second: bool,
                 seeds=(0, 1), twin: bool = True):
        cfg = NetConfig((obs_dim + act_dim, *hidden_sizes, 1))
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.negate_second = negate_second
        self.net1 = init_params(cfg, int(seeds[0]))
        self.target1 = self.net1.copy()
        self.adam1 = AdamState.for_params(self.net1)
        if twin:
            self.net2 = init_params(cfg, int(seeds[1]))
            self.target2 = self.net2.copy()
            self.adam2 = AdamState.for_params(self.net2)
        else:
            self.net2 = self.target2 = self.adam2 = None

    @property
    def twin(self) -> bool:
        return self.net2 is not None

    def _net(self, i: int, use_target: bool) -> NetworkParams:
        if i == 1:
            return self.target1 if use_target else self.net1
        if i == 2 and self.twin:
            return self.target2 if use_target else self.net2
        raise ValueError(f"no critic network {i}")

    def sign(self, i: int) -> float:
        return -1.0 if (i == 2 and self.negate_second) else 1.0


def critic_raw(ens: CriticEnsemble, i: int, s: np.ndarray, a: np.ndarray,
               use_target: bool = False):
    """Post-negation value of critic i on (s, a); batched when inputs are 2-D."""
    s = np.asarray(s, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    x = np.concatenate([s, a], axis=-1)
    y, _ = forward(ens._net(i, use_target), x)
    q = ens.sign(i) * y[..., 0]
    return float(q) if x.ndim == 1 else q


def styled_q(ens: CriticEnsemble, j: int, s: np.ndarray, a: np.ndarray,
             use_target: bool = False):
    """Styled estimator: j=0 first critic, j=1 second, j=2 max, j=3 min."""
    if j == 0:
        return critic_raw(ens, 1, s, a, use_target)
    if not ens.twin:
        raise ValueError(f"style {j} needs twin critics")
    if j == 1:
        return critic_raw(ens, 2, s, a, use_target)
    q1 = critic_raw(ens, 1, s, a, use_target)
    q2 = critic_raw(ens, 2, s, a, use_target)
    if j == 2:
        return max(q1, q2) if np.isscalar(q1) else np.maximum(q1, q2)
    if j == 3:
        return min(q1, q2) if np.isscalar(q1) else np.minimum(q1, q2)
    raise ValueError(f"style index {j} out of range")


class CentralizedActor:
    """One deterministic policy network over concat(s, one_hot(z)) with a
    tanh head scaled to the action bound, plus a target copy."""

    def __init__(self, obs_dim: int, act_dim: int, act_bound: float,
                 num_styles: int, hidden_sizes, seed: int):
        cfg = NetConfig((obs_dim + num_styles, *hidden_sizes, act_dim),
                        output_head="bounded", output_scale=act_bound)
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.act_bound = act_bound
        self.num_styles = num_styles
        self.net = init_params(cfg, int(seed))
        self.target = self.net.copy()
        self.adam = AdamState.for_params(self.net)

    def act(self, obs: np.ndarray, z: int, use_target: bool = False) -> np.ndarray:
        x = np.concatenate([np.asarray(obs, dtype=np.float64), one_hot(z, self.num_styles)])
        y, _ = forward(self.target if use_target else self.net, x)
        return y

    def act_batch(self, obs: np.ndarray, zs: np.ndarray, use_target: bool = False) -> np.ndarray:
        x = np.concatenate([obs, one_hot_batch(zs, self.num_styles)], axis=1)
        y, _ = forward(self.target if use_target else self.net, x)
        return y

    def parameter_nets(self):
        return [self.net]


class SeparateActors:
    """One independent policy network per style (the no-cooperation ablation).

    Each network sees only the observation; the style label selects which
    network acts."""

    def __init__(self, obs_dim: int, act_dim: int, act_bound: float,
                 num_styles: int, hidden_sizes, seeds):
        cfg = NetConfig((obs_dim, *hidden_sizes, act_dim),
                        output_head="bounded", output_scale=act_bound)
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.act_bound = act_bound
        self.num_styles = num_styles
        self.nets = [init_params(cfg, int(s)) for s in seeds]
        self.targets = [n.copy() for n in self.nets]
        self.adams = [AdamState.for_params(n) for n in self.nets]

    def act(self, obs: np.ndarray, z: int, use_target: bool = False) -> np.ndarray:
        if not 0 <= z < self.num_styles:
            raise ValueError(f"style {z} out of range")
        net = self.targets[z] if use_target else self.nets[z]
        y, _ = forward(net, np.asarray(obs, dtype=np.float64))
        return y

    def act_batch(self, obs: np.ndarray, zs: np.ndarray, use_target: bool = False) -> np.ndarray:
        zs = np.asarray(zs, dtype=np.int64)
        out = np.empty((obs.shape[0], self.act_dim))
        for j in range(self.num_styles):
            mask = zs == j
            if mask.any():
                net = self.targets[j] if use_target else self.nets[j]
                y, _ = forward(net, obs[mask])
                out[mask] = y
        return out

    def parameter_nets(self):
        return list(self.nets)


def select_action(actor, s: np.ndarray, z: int, noise_std: float,
                  rng: np.random.Generator, act_bound: float) -> np.ndarray:
    """Noiseless policy action plus per-dimension Gaussian noise, clipped to
    the action box."""
    a = actor.act(s, z)
    if noise_std > 0:
        a = a + rng.normal(0.0, noise_std, size=a.shape)
    return np.clip(a, -act_bound, act_bound)


def td_target(ens: CriticEnsemble, actor, batch: TransitionBatch,
              rng: np.random.Generator, cfg: CcepConfig) -> np.ndarray:
    """Bootstrap targets y = r + gamma * (1-done) * min_i Q'_i(s', a') where
    a' is the target policy's action under the stored next-step style, with
    clipped Gaussian smoothing noise when target_noise > 0.  Computed from
    target networks only."""
    a_next = actor.act_batch(batch.s_next, batch.z_next, use_target=True)
    if cfg.target_noise > 0:
        eps = rng.normal(0.0, cfg.target_noise, size=a_next.shape)
        np.clip(eps, -cfg.noise_clip, cfg.noise_clip, out=eps)
        a_next = np.clip(a_next + eps, -actor.act_bound, actor.act_bound)
    q_next = critic_raw(ens, 1, batch.s_next, a_next, use_target=True)
    if ens.twin:
        q2 = critic_raw(ens, 2, batch.s_next, a_next, use_target=True)
        q_next = np.minimum(q_next, q2)
    return batch.r + cfg.gamma * (1.0 - batch.done) * q_next


def critic_update(ens: CriticEnsemble, batch: TransitionBatch,
                  targets: np.ndarray, cfg: CcepConfig):
    """One Adam step per critic on the MSE between post-negation outputs and
    the targets.  The gradient flows through the negation, so with opposite
    targets the raw second network regresses toward -y."""
    x = np.concatenate([batch.s, batch.a], axis=1)
    n = x.shape[0]
    losses = []
    for i, (net, adam) in enumerate(((ens.net1, ens.adam1), (ens.net2, ens.adam2)), start=1):
        if net is None:
            losses.append(None)
            continue
        y_raw, cache = forward(net, x)
        sign = ens.sign(i)
        err = sign * y_raw[:, 0] - targets
        losses.append(float(np.mean(err * err)))
        gout = (2.0 * sign / n) * err
        grads, _ = backward(net, cache, gout[:, None])
        adam_step(net, grads, adam, cfg.lr_critic)
    return tuple(losses)


def _styled_value_and_action_grad(ens: CriticEnsemble, x: np.ndarray, j: int):
    """Styled value Q^j at critic input x = concat(s, a) and its gradient
    w.r.t. the action slice.  Max/min route the gradient through the
    selected branch per row; ties go to the first network."""
    obs_dim = ens.obs_dim
    y1, c1 = forward(ens.net1, x)
    q1 = y1[:, 0]
    if j == 0:
        _, gin = backward(ens.net1, c1, np.ones((x.shape[0], 1)))
        return q1, gin[:, obs_dim:]
    s2 = ens.sign(2)
    y2, c2 = forward(ens.net2, x)
    q2 = s2 * y2[:, 0]
    if j == 1:
        _, gin = backward(ens.net2, c2, np.full((x.shape[0], 1), s2))
        return q2, gin[:, obs_dim:]
    if j == 2:
        sel = q1 >= q2
    elif j == 3:
        sel = q1 <= q2
    else:
        raise ValueError(f"style index {j} out of range")
    m = sel.astype(np.float64)[:, None]
    _, g1 = backward(ens.net1, c1, m)
    _, g2 = backward(ens.net2, c2, s2 * (1.0 - m))
    q = np.where(sel, q1, q2)
    return q, (g1 + g2)[:, obs_dim:]


def actor_objective_gradient(actor: CentralizedActor, ens: CriticEnsemble,
                             states: np.ndarray):
    """Mean styled value J = (N K)^-1 sum_{s,j} Q^j(s, pi(s, one_hot(j)))
    and its exact gradient w.r.t. the actor parameters (ascent direction)."""
    n = states.shape[0]
    k = actor.num_styles
    total = 0.0
    acc = None
    for j in range(k):
        style = np.tile(one_hot(j, k), (n, 1))
        a, cache = forward(actor.net, np.concatenate([states, style], axis=1))
        q, dq_da = _styled_value_and_action_grad(ens, np.concatenate([states, a], axis=1), j)
        total += float(q.sum())
        grads, _ = backward(actor.net, cache, dq_da)
        if acc is None:
            acc = grads
        else:
            for aw, gw in zip(acc.weights, grads.weights):
                aw += gw
            for ab, gb in zip(acc.biases, grads.biases):
                ab += gb
    scale = 1.0 / (n * k)
    acc.scale(scale)
    return total * scale, acc


def policy_update(actor, ens: CriticEnsemble, states: np.ndarray,
                  cfg: CcepConfig) -> float:
    """One Adam ascent step on the styled-value objective.

    The centralized actor takes a single step on the gradient averaged over
    all N x K (state, style) terms; separate actors each take a step toward
    their own style's estimator, averaged over N states."""
    if isinstance(actor, SeparateActors):
        n = states.shape[0]
        total = 0.0
        for j in range(actor.num_styles):
            a, cache = forward(actor.nets[j], states)
            q, dq_da = _styled_value_and_action_grad(
                ens, np.concatenate([states, a], axis=1), j)
            total += float(q.sum())
            grads, _ = backward(actor.nets[j], cache, dq_da)
            grads.scale(-1.0 / n)  # ascent
            adam_step(actor.nets[j], grads, actor.adams[j], cfg.lr_actor)
        return total / (n * actor.num_styles)
    value, grads = actor_objective_gradient(actor, ens, states)
    grads.scale(-1.0)  # ascent
    adam_step(actor.net, grads, actor.adam, cfg.lr_actor)
    return value


def controversy(ens: CriticEnsemble, actor, states: np.ndarray,
                skills: np.ndarray) -> float:
    """Mean absolute disagreement |Q1 - Q2| at the policy's own actions,
    with each row's style taken from its stored skill label."""
    if not ens.twin:
        return float("nan")
    a = actor.act_batch(states, skills)
    q1 = critic_raw(ens, 1, states, a)
    q2 = critic_raw(ens, 2, states, a)
    return float(np.mean(np.abs(q1 - q2)))


@dataclass
class TrainState:
    """Everything a metrics callback may need mid-run."""

    config: CcepConfig
    env_spec: EnvSpec
    actor: object
    critics: CriticEnsemble
    buffer: ReplayBuffer
    step: int = 0


def build_agent(cfg: CcepConfig, env_spec: EnvSpec, seed_ints) -> tuple[object, CriticEnsemble]:
    """Construct actor(s) and critics for the resolved config."""
    actor_seed, c1, c2, extra = seed_ints
    if cfg.algorithm == "ccep-separate":
        actor = SeparateActors(env_spec.obs_dim, env_spec.act_dim, env_spec.act_bound,
                               cfg.num_styles, cfg.hidden_sizes,
                               seeds=[actor_seed + j for j in range(cfg.num_styles)])
    else:
        actor = CentralizedActor(env_spec.obs_dim, env_spec.act_dim, env_spec.act_bound,
                                 cfg.num_styles, cfg.hidden_sizes, actor_seed)
    critics = CriticEnsemble(env_spec.obs_dim, env_spec.act_dim, cfg.hidden_sizes,
                             negate_second=bool(cfg.opposite_targets),
                             seeds=(c1, c2), twin=cfg.algorithm != "ddpg")
    return actor, critics


def train(config: CcepConfig, env, on_transition=None, on_eval=None,
          eval_interval: int | None = None) -> TrainState:
    """Run the full training loop.

    Per step: sample a style uniformly, act (uniform-random during warmup,
    Gaussian-noised policy after), store the transition with the styles that
    produced this and the next action, then after warmup do one critic
    update per step and an actor + target soft update every policy_delay
    steps.  on_transition(step, transition) fires every step; on_eval(step,
    state) fires at step 0 and every eval_interval steps.  Deterministic
    given (config, env seed stream).
    """
    cfg = config.resolved()
    spec = env.spec()
    master = np.random.default_rng(cfg.seed)
    seed_ints = [int(s) for s in master.integers(2**63, size=6)]
    env_seed, actor_seed, c1_seed, c2_seed, stream_seed, _reserved = seed_ints

    actor, critics = build_agent(cfg, spec, (actor_seed, c1_seed, c2_seed, _reserved))
    # capping capacity at total_steps changes nothing observable: the ring
    # never wraps earlier than it would with the full capacity
    buffer = ReplayBuffer(min(cfg.buffer_capacity, cfg.total_steps))
    rng = np.random.default_rng(stream_seed)
    state = TrainState(cfg, spec, actor, critics, buffer)

    k = cfg.num_styles
    bound = spec.act_bound
    obs = env.reset(seed=env_seed)
    z = int(rng.integers(k))

    if on_eval is not None and eval_interval:
        on_eval(0, state)

    for t in range(1, cfg.total_steps + 1):
        if t <= cfg.warmup_steps:
            a = rng.uniform(-bound, bound, size=spec.act_dim)
        else:
            a = select_action(actor, obs, z, cfg.exploration_noise, rng, bound)
        res = env.step(a)
        z_next = int(rng.integers(k))
        tr = Transition(obs, z, a, res.reward, res.next_obs, z_next,
                        done=res.done and not res.truncated)
        buffer.push(tr)
        if on_transition is not None:
            on_transition(t, tr)

        if res.done:
            obs = env.reset()
            z = int(rng.integers(k))  # fresh style at episode start
        else:
            obs = res.next_obs
            z = z_next

        if t > cfg.warmup_steps:
            batch = buffer.sample(cfg.batch_size, rng)
            y = td_target(critics, actor, batch, rng, cfg)
            critic_update(critics, batch, y, cfg)
            if t % cfg.policy_delay == 0:
                policy_update(actor, critics, batch.s, cfg)
                soft_update(critics.target1, critics.net1, cfg.tau)
                if critics.twin:
                    soft_update(critics.target2, critics.net2, cfg.tau)
                if isinstance(actor, SeparateActors):
                    for tgt, net in zip(actor.targets, actor.nets):
                        soft_update(tgt, net, cfg.tau)
                else:
                    soft_update(actor.target, actor.net, cfg.tau)

        if on_eval is not None and eval_interval and t % eval_interval == 0:
            state.step = t
            on_eval(t, state)

    state.step = cfg.total_steps
    return state
