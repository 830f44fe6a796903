"""Experiment configuration: a flat JSON file of documented keys, with CLI
flag overrides and an environment-variable output-root override."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .agent import ALGORITHMS, CcepConfig
from .metrics import EVAL_MODES

ENV_NAMES = ("pendulum", "pointmaze")
OUT_ROOT_VAR = "CCEP_OUT_ROOT"


@dataclass(frozen=True)
class RunConfig:
    """One experiment: environment, algorithm, training hyperparameters,
    evaluation protocol, and output location."""

    env: str = "pendulum"
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
    opposite_targets: bool | None = None
    eval_interval: int = 5_000
    eval_episodes: int = 10
    eval_mode: str = "mixture"
    grid_resolution: int = 20
    out_dir: str = "runs"
    seeds: tuple[int, ...] = (0,)
    maze_walls: tuple[tuple[float, float, float, float], ...] | None = None

    def __post_init__(self):
        if self.env not in ENV_NAMES:
            raise ValueError(f"unknown env {self.env!r}; choose from {ENV_NAMES}")
        if self.eval_interval < 1:
            raise ValueError("eval_interval must be >= 1")
        if self.eval_episodes < 1:
            raise ValueError("eval_episodes must be >= 1")
        if self.eval_mode not in EVAL_MODES:
            raise ValueError(f"eval_mode must be one of {EVAL_MODES}")
        if self.grid_resolution < 1:
            raise ValueError("grid_resolution must be >= 1")
        if not self.seeds:
            raise ValueError("need at least one seed")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if self.maze_walls is not None:
            walls = tuple(tuple(float(c) for c in w) for w in self.maze_walls)
            if any(len(w) != 4 for w in walls):
                raise ValueError("each maze wall needs 4 coordinates (x1, y1, x2, y2)")
            object.__setattr__(self, "maze_walls", walls)
        self.to_ccep(self.seeds[0])  # delegates hyperparameter validation

    def to_ccep(self, seed: int) -> CcepConfig:
        return CcepConfig(
            algorithm=self.algorithm,
            num_styles=self.num_styles,
            hidden_sizes=self.hidden_sizes,
            lr_actor=self.lr_actor,
            lr_critic=self.lr_critic,
            batch_size=self.batch_size,
            gamma=self.gamma,
            tau=self.tau,
            policy_delay=self.policy_delay,
            target_noise=self.target_noise,
            noise_clip=self.noise_clip,
            exploration_noise=self.exploration_noise,
            warmup_steps=self.warmup_steps,
            buffer_capacity=self.buffer_capacity,
            total_steps=self.total_steps,
            seed=int(seed),
            opposite_targets=self.opposite_targets,
        )


_FIELD_NAMES = {f.name for f in dataclasses.fields(RunConfig)}


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Parse a JSON config file; unset keys take the defaults above.

    Unknown keys are rejected.  `overrides` (e.g. from CLI flags) are applied
    on top of the file's values."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ValueError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}: not valid JSON ({e})")
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: top level must be a JSON object")
    unknown = set(raw) - _FIELD_NAMES
    if unknown:
        raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**raw)
    except (ValueError, TypeError) as e:
        raise ValueError(f"{path}: invalid config: {e}")


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(
        json.dumps(dataclasses.asdict(cfg), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def resolve_out_dir(cfg: RunConfig) -> Path:
    """Output directory, rooted at $CCEP_OUT_ROOT when that is set."""
    root = os.environ.get(OUT_ROOT_VAR)
    return (Path(root) / cfg.out_dir) if root else Path(cfg.out_dir)
