"""In-process continuous-control environments.

Two desk-scale tasks behind one interface: a dense-reward pendulum swing-up
and a sparse-reward 2-D point-mass maze whose S-shaped corridor forces
multi-step exploration.  All dynamics are deterministic; randomness enters
only through reset seeding, so trajectories are bit-reproducible given
(seed, action sequence).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EnvSpec:
    obs_dim: int
    act_dim: int
    act_bound: float
    max_episode_steps: int


@dataclass
class StepResult:
    next_obs: np.ndarray
    reward: float
    done: bool          # episode over (terminated or truncated)
    truncated: bool     # over due to the step limit only


def wrap_angle(theta: float) -> float:
    """Map an angle to (-pi, pi]."""
    return np.pi - (np.pi - theta) % (2.0 * np.pi)


class PendulumEnv:
    """Torque-controlled pendulum swing-up.

    Dynamics: theta_dd = 3g/(2l) sin(theta) + 3/(m l^2) u with g=10, m=1,
    l=1, dt=0.05, integrated semi-implicitly; angular velocity clamped to
    [-8, 8].  Reward is -(wrap(theta)^2 + 0.1 theta_dot^2 + 0.001 u^2)
    evaluated at the pre-step state.  Episodes truncate at 200 steps and
    never terminate early.
    """

    name = "pendulum"

    G = 10.0
    MASS = 1.0
    LENGTH = 1.0
    DT = 0.05
    MAX_SPEED = 8.0
    MAX_TORQUE = 2.0
    MAX_STEPS = 200

    def __init__(self, seed: int | None = None):
        self._rng = np.random.default_rng(seed)
        self.theta = 0.0
        self.theta_dot = 0.0
        self._steps = 0
        self._needs_reset = True

    def spec(self) -> EnvSpec:
        return EnvSpec(obs_dim=3, act_dim=1, act_bound=self.MAX_TORQUE,
                       max_episode_steps=self.MAX_STEPS)

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self.theta = self._rng.uniform(-np.pi, np.pi)
        self.theta_dot = self._rng.uniform(-1.0, 1.0)
        self._steps = 0
        self._needs_reset = False
        return self._obs()

    def step(self, action: np.ndarray) -> StepResult:
        if self._needs_reset:
            raise RuntimeError("episode is over; call reset() first")
        u = float(np.clip(np.asarray(action, dtype=np.float64).reshape(-1)[0],
                          -self.MAX_TORQUE, self.MAX_TORQUE))
        th, thd = self.theta, self.theta_dot
        reward = -(wrap_angle(th) ** 2 + 0.1 * thd**2 + 0.001 * u**2)
        acc = (3.0 * self.G / (2.0 * self.LENGTH) * np.sin(th)
               + 3.0 / (self.MASS * self.LENGTH**2) * u)
        thd = float(np.clip(thd + acc * self.DT, -self.MAX_SPEED, self.MAX_SPEED))
        th = th + thd * self.DT
        self.theta, self.theta_dot = th, thd
        self._steps += 1
        truncated = self._steps >= self.MAX_STEPS
        if truncated:
            self._needs_reset = True
        return StepResult(self._obs(), reward, done=truncated, truncated=truncated)

    def _obs(self) -> np.ndarray:
        return np.array([np.cos(self.theta), np.sin(self.theta), self.theta_dot])


# Default S-corridor: two overlapping horizontal baffles.  The agent must
# go right under the lower wall, up the right side, left between the walls,
# and up the left side to reach the goal.
DEFAULT_WALLS = (
    (0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0),
    (1.0 / 3.0, 2.0 / 3.0, 1.0, 2.0 / 3.0),
)


class PointMazeEnv:
    """Sparse-reward point mass in the unit square.

    Actions displace the point by up to 0.05 per axis.  Motion stops at the
    first wall contact.  Reward is 1 exactly when the point is inside the
    goal disc, which also terminates the episode; otherwise 0.  Episodes
    truncate at 200 steps.
    """

    name = "pointmaze"

    STEP_SIZE = 0.05
    MAX_STEPS = 200
    START = (0.1, 0.1)
    GOAL = (0.9, 0.9)
    GOAL_RADIUS = 0.05
    CONTACT_BACKOFF = 1e-9

    def __init__(self, seed: int | None = None, walls=None):
        self.walls = [tuple(float(c) for c in w) for w in
                      (DEFAULT_WALLS if walls is None else walls)]
        for x1, y1, x2, y2 in self.walls:
            if x1 != x2 and y1 != y2:
                raise ValueError(f"wall ({x1},{y1})-({x2},{y2}) is not axis-aligned")
        self.pos = np.array(self.START)
        self._steps = 0
        self._needs_reset = True

    def spec(self) -> EnvSpec:
        return EnvSpec(obs_dim=2, act_dim=2, act_bound=self.STEP_SIZE,
                       max_episode_steps=self.MAX_STEPS)

    def reset(self, seed: int | None = None) -> np.ndarray:
        self.pos = np.array(self.START)
        self._steps = 0
        self._needs_reset = False
        return self.pos.copy()

    def step(self, action: np.ndarray) -> StepResult:
        if self._needs_reset:
            raise RuntimeError("episode is over; call reset() first")
        delta = np.clip(np.asarray(action, dtype=np.float64).reshape(-1)[:2],
                        -self.STEP_SIZE, self.STEP_SIZE)
        target = np.clip(self.pos + delta, 0.0, 1.0)
        self.pos = self._move(self.pos, target)
        self._steps += 1
        in_goal = float(np.hypot(self.pos[0] - self.GOAL[0],
                                 self.pos[1] - self.GOAL[1])) <= self.GOAL_RADIUS
        truncated = self._steps >= self.MAX_STEPS and not in_goal
        done = in_goal or truncated
        if done:
            self._needs_reset = True
        return StepResult(self.pos.copy(), 1.0 if in_goal else 0.0, done, truncated)

    def _move(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """Advance p toward q, stopping just before the first wall contact."""
        t_hit = 1.0
        for x1, y1, x2, y2 in self.walls:
            if y1 == y2:  # horizontal wall: crossing in y
                t = self._crossing(p[1], q[1], y1, p[0], q[0], min(x1, x2), max(x1, x2))
            else:         # vertical wall: crossing in x
                t = self._crossing(p[0], q[0], x1, p[1], q[1], min(y1, y2), max(y1, y2))
            if t is not None:
                t_hit = min(t_hit, t)
        if t_hit >= 1.0:
            return q
        t_hit = max(0.0, t_hit - self.CONTACT_BACKOFF)
        return p + t_hit * (q - p)

    @staticmethod
    def _crossing(a0, a1, level, b0, b1, lo, hi):
        """Parameter t where segment (a0->a1) crosses `level` within [lo, hi]
        along the other axis, or None."""
        d0, d1 = a0 - level, a1 - level
        if d0 == 0.0:
            return None  # starting on the wall line; allow moving off it
        if (d0 > 0 and d1 > 0) or (d0 < 0 and d1 < 0):
            return None  # stays on one side (landing exactly on it counts as contact)
        t = d0 / (d0 - d1)
        other = b0 + t * (b1 - b0)
        if lo <= other <= hi:
            return t
        return None


def make_env(name: str, seed: int | None = None, walls=None):
    """Construct an environment by name ("pendulum" or "pointmaze")."""
    if name == "pendulum":
        return PendulumEnv(seed=seed)
    if name == "pointmaze":
        return PointMazeEnv(seed=seed, walls=walls)
    raise ValueError(f"unknown environment {name!r}")
