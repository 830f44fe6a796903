"""Brute-force verification of the performance-gap bound on small MDPs.

For an explicit (P, r, gamma) model, value iteration yields the optimal
Q* and V*; greedifying any approximate value table f and evaluating the
resulting policy exactly lets us check, empirically, that

    ||V* - V^{pi_f}||_inf  <=  2 ||f - Q*||_inf / (1 - gamma)

holds on every instance.  Any violation beyond numerical slack would be
an implementation bug, since the inequality is a theorem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROB_TOL = 1e-12
BOUND_SLACK = 1e-8


@dataclass
class TabularMdp:
    """Explicit finite MDP: P[s, a, s'] transition probabilities, r[s, a]
    rewards, discount gamma in (0, 1)."""

    transitions: np.ndarray
    rewards: np.ndarray
    gamma: float

    def __post_init__(self):
        self.transitions = np.asarray(self.transitions, dtype=np.float64)
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        if self.transitions.ndim != 3 or self.transitions.shape[0] != self.transitions.shape[2]:
            raise ValueError("transitions must have shape (S, A, S)")
        if self.rewards.shape != self.transitions.shape[:2]:
            raise ValueError("rewards must have shape (S, A)")
        if not np.isfinite(self.rewards).all():
            raise ValueError("rewards must be finite")
        if np.any(self.transitions < -PROB_TOL):
            raise ValueError("negative transition probability")
        row_sums = self.transitions.sum(axis=2)
        if np.any(np.abs(row_sums - 1.0) > PROB_TOL):
            raise ValueError("transition rows must sum to 1")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")

    @property
    def n_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transitions.shape[1]


def value_iteration(mdp: TabularMdp, tol: float = 1e-10):
    """Bellman-optimal (Q*, V*).

    Iterates until the sup-norm residual drops below tol*(1-gamma)/gamma,
    which guarantees ||V - V*||_inf < tol.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    g = mdp.gamma
    stop = tol * (1.0 - g) / g
    v = np.zeros(mdp.n_states)
    while True:
        q = mdp.rewards + g * mdp.transitions @ v
        v_new = q.max(axis=1)
        if np.abs(v_new - v).max() < stop:
            return q, v_new
        v = v_new


def greedy_policy(f: np.ndarray) -> np.ndarray:
    """Deterministic argmax policy; ties break toward the lowest action index."""
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 2:
        raise ValueError("value table must be 2-D (states x actions)")
    if not np.isfinite(f).all():
        raise ValueError("value table must be finite")
    return f.argmax(axis=1)


def policy_evaluation(mdp: TabularMdp, policy: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Value of a deterministic policy, iterated to the same residual rule
    as value_iteration."""
    policy = np.asarray(policy, dtype=np.int64)
    if policy.shape != (mdp.n_states,):
        raise ValueError("policy must assign one action per state")
    states = np.arange(mdp.n_states)
    r_pi = mdp.rewards[states, policy]
    p_pi = mdp.transitions[states, policy]
    g = mdp.gamma
    stop = tol * (1.0 - g) / g
    v = np.zeros(mdp.n_states)
    while True:
        v_new = r_pi + g * p_pi @ v
        if np.abs(v_new - v).max() < stop:
            return v_new
        v = v_new


def check_bound(mdp: TabularMdp, f: np.ndarray, tol: float = 1e-10):
    """Evaluate both sides of the performance-gap inequality.

    Returns (lhs, rhs, holds) where lhs = ||V* - V^{pi_f}||_inf,
    rhs = 2 ||f - Q*||_inf / (1 - gamma), and holds allows a small
    slack for accumulated floating error.
    """
    q_star, v_star = value_iteration(mdp, tol)
    pi_f = greedy_policy(f)
    v_pi = policy_evaluation(mdp, pi_f, tol)
    lhs = float(np.abs(v_star - v_pi).max())
    rhs = float(2.0 * np.abs(np.asarray(f) - q_star).max() / (1.0 - mdp.gamma))
    return lhs, rhs, lhs <= rhs + BOUND_SLACK


def random_mdp(rng: np.random.Generator, max_states: int = 10, max_actions: int = 4,
               gamma_range=(0.5, 0.95)) -> TabularMdp:
    """Random dense MDP: Dirichlet(1,...,1) transition rows, rewards U[0,1]."""
    n_s = int(rng.integers(2, max_states + 1))
    n_a = int(rng.integers(2, max_actions + 1))
    p = rng.dirichlet(np.ones(n_s), size=(n_s, n_a))
    r = rng.uniform(0.0, 1.0, size=(n_s, n_a))
    gamma = float(rng.uniform(*gamma_range))
    return TabularMdp(p, r, gamma)


def run_bound_trials(n_trials: int, seed: int, noise: float = 1.0):
    """check_bound over random MDPs with f = Q* + U[-noise, noise] perturbation.

    Returns (n_holds, max_ratio) where max_ratio is the largest observed
    lhs/rhs over trials with rhs > 0.
    """
    rng = np.random.default_rng(seed)
    n_holds = 0
    max_ratio = 0.0
    for _ in range(n_trials):
        mdp = random_mdp(rng)
        q_star, _ = value_iteration(mdp)
        f = q_star + rng.uniform(-noise, noise, size=q_star.shape)
        lhs, rhs, holds = check_bound(mdp, f)
        if holds:
            n_holds += 1
        if rhs > 0:
            max_ratio = max(max_ratio, lhs / rhs)
    return n_holds, max_ratio
