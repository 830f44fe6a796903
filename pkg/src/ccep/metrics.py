"""Evaluation and exploration measurement.

Episodic-return evaluation (noiseless rollouts, per-style or mixture style
selection), grid-cell coverage of the visited state space, and per-style
coverage divergence.  Coverage works on the environments' native
low-dimensional coordinates, so exploration breadth is an exact counting
statistic rather than an embedding plot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs import wrap_angle

EVAL_MODES = ("mixture", "per-style")


@dataclass
class EvalReport:
    """Return statistics from one evaluation round.

    per_style_mean[j] is nan if style j ran no episodes (possible in
    mixture mode, where styles are drawn at random per episode).
    """

    per_style_mean: np.ndarray
    mean: float
    std: float
    episodes: int


def evaluate(policy, env, episodes: int = 10, mode: str = "mixture",
             seed: int = 0) -> EvalReport:
    """Noiseless policy rollouts, undiscounted episodic returns.

    mixture mode samples a style per episode; per-style mode runs
    episodes // num_styles (at least one) per style with the style fixed.
    Deterministic given seed; the training environment is untouched if a
    dedicated instance is passed in.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    if mode not in EVAL_MODES:
        raise ValueError(f"mode must be one of {EVAL_MODES}")
    k = policy.num_styles
    rng = np.random.default_rng(seed)
    if mode == "per-style":
        n_per = max(1, episodes // k)
        plan = [j for j in range(k) for _ in range(n_per)]
    else:
        plan = [int(rng.integers(k)) for _ in range(episodes)]

    returns = []
    by_style = [[] for _ in range(k)]
    for z in plan:
        obs = env.reset(seed=int(rng.integers(2**63)))
        total = 0.0
        while True:
            res = env.step(policy.act(obs, z))
            total += res.reward
            if res.done:
                break
            obs = res.next_obs
        returns.append(total)
        by_style[z].append(total)

    per_style = np.array([np.mean(r) if r else np.nan for r in by_style])
    arr = np.asarray(returns)
    return EvalReport(per_style, float(arr.mean()), float(arr.std()), len(arr))


class CoverageGrid:
    """Boolean occupancy grid over a box, `resolution` cells per dimension."""

    def __init__(self, bounds, resolution: int = 20):
        self.bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
        if any(hi <= lo for lo, hi in self.bounds):
            raise ValueError("each bound must satisfy lo < hi")
        if resolution < 1:
            raise ValueError("resolution must be >= 1")
        self.resolution = int(resolution)
        self._visited = np.zeros((self.resolution,) * len(self.bounds), dtype=bool)
        self._count = 0

    @property
    def total_cells(self) -> int:
        return self._visited.size

    @property
    def visited_count(self) -> int:
        return self._count

    def _cell(self, state) -> tuple:
        idx = []
        for x, (lo, hi) in zip(state, self.bounds):
            # out-of-bound states clamp to the edge cells
            i = int((float(x) - lo) / (hi - lo) * self.resolution)
            idx.append(min(max(i, 0), self.resolution - 1))
        return tuple(idx)

    def record_visit(self, state) -> None:
        cell = self._cell(state)
        if not self._visited[cell]:
            self._visited[cell] = True
            self._count += 1

    def coverage(self) -> float:
        return self._count / self.total_cells

    def visited_mask(self) -> np.ndarray:
        return self._visited.copy()

    def same_geometry(self, other: "CoverageGrid") -> bool:
        return self.bounds == other.bounds and self.resolution == other.resolution


@dataclass
class StyleDivergence:
    """Per-style unique cell counts and the pairwise Jaccard overlap matrix."""

    unique_cells: list[int]
    jaccard: np.ndarray


def style_divergence(grids: list[CoverageGrid]) -> StyleDivergence:
    """How differently the styles explored.

    unique_cells[j] counts cells visited by style j and no other style;
    jaccard[i, j] = |V_i & V_j| / |V_i | V_j| (1.0 when both sets are
    empty, since they are identical)."""
    if len(grids) < 2:
        raise ValueError("need at least two styles to compare")
    first = grids[0]
    if not all(first.same_geometry(g) for g in grids[1:]):
        raise ValueError("coverage grids differ in bounds or resolution")
    masks = [g.visited_mask() for g in grids]
    k = len(masks)

    unique = []
    for j, m in enumerate(masks):
        others = np.zeros_like(m)
        for i, o in enumerate(masks):
            if i != j:
                others |= o
        unique.append(int((m & ~others).sum()))

    jac = np.ones((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            union = int((masks[i] | masks[j]).sum())
            inter = int((masks[i] & masks[j]).sum())
            jac[i, j] = jac[j, i] = 1.0 if union == 0 else inter / union
    return StyleDivergence(unique, jac)


def coverage_bounds(env_name: str):
    """Native 2-D coverage box per environment."""
    if env_name == "pendulum":
        return ((-np.pi, np.pi), (-8.0, 8.0))
    if env_name == "pointmaze":
        return ((0.0, 1.0), (0.0, 1.0))
    raise ValueError(f"no coverage bounds defined for {env_name!r}")


def coverage_point(env_name: str, obs: np.ndarray) -> tuple[float, float]:
    """Project an observation to the 2-D coverage coordinates."""
    if env_name == "pendulum":
        return (wrap_angle(float(np.arctan2(obs[1], obs[0]))), float(obs[2]))
    if env_name == "pointmaze":
        return (float(obs[0]), float(obs[1]))
    raise ValueError(f"no coverage projection defined for {env_name!r}")
