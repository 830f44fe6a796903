"""Fixed-capacity ring buffer of skill-labeled transitions with uniform
minibatch sampling (with replacement)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Transition:
    """One step of experience.

    done is True only for genuine termination, never for time-limit
    truncation, so TD targets bootstrap through horizon cuts.
    """

    s: np.ndarray
    z: int
    a: np.ndarray
    r: float
    s_next: np.ndarray
    z_next: int
    done: bool


@dataclass
class TransitionBatch:
    """Column-major minibatch: row i of every array is one transition."""

    s: np.ndarray        # (N, obs_dim)
    z: np.ndarray        # (N,) int
    a: np.ndarray        # (N, act_dim)
    r: np.ndarray        # (N,)
    s_next: np.ndarray   # (N, obs_dim)
    z_next: np.ndarray   # (N,) int
    done: np.ndarray     # (N,) float 0/1

    def __len__(self) -> int:
        return self.s.shape[0]

    def row(self, i: int) -> Transition:
        return Transition(self.s[i].copy(), int(self.z[i]), self.a[i].copy(),
                          float(self.r[i]), self.s_next[i].copy(),
                          int(self.z_next[i]), bool(self.done[i]))


class ReplayBuffer:
    """Ring storage: overwrites oldest entries once capacity is reached."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.size = 0
        self._cursor = 0
        self._arrays = None  # allocated lazily from the first transition's dims

    def _allocate(self, t: Transition) -> None:
        n = self.capacity
        self._obs_dim = t.s.shape[0]
        self._act_dim = t.a.shape[0]
        self._arrays = dict(
            s=np.empty((n, self._obs_dim)),
            z=np.empty(n, dtype=np.int64),
            a=np.empty((n, self._act_dim)),
            r=np.empty(n),
            s_next=np.empty((n, self._obs_dim)),
            z_next=np.empty(n, dtype=np.int64),
            done=np.empty(n),
        )

    def push(self, t: Transition) -> None:
        s = np.asarray(t.s, dtype=np.float64)
        a = np.asarray(t.a, dtype=np.float64)
        s_next = np.asarray(t.s_next, dtype=np.float64)
        if self._arrays is None:
            self._allocate(Transition(s, t.z, a, t.r, s_next, t.z_next, t.done))
        if s.shape != (self._obs_dim,) or s_next.shape != (self._obs_dim,):
            raise ValueError(f"observation shape {s.shape} != ({self._obs_dim},)")
        if a.shape != (self._act_dim,):
            raise ValueError(f"action shape {a.shape} != ({self._act_dim},)")
        arr = self._arrays
        i = self._cursor
        arr["s"][i] = s
        arr["z"][i] = t.z
        arr["a"][i] = a
        arr["r"][i] = t.r
        arr["s_next"][i] = s_next
        arr["z_next"][i] = t.z_next
        arr["done"][i] = 1.0 if t.done else 0.0
        self._cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> TransitionBatch:
        """batch_size independent uniform draws with replacement."""
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return self._gather(idx)

    def _gather(self, idx) -> TransitionBatch:
        arr = self._arrays
        return TransitionBatch(
            s=arr["s"][idx], z=arr["z"][idx], a=arr["a"][idx], r=arr["r"][idx],
            s_next=arr["s_next"][idx], z_next=arr["z_next"][idx], done=arr["done"][idx],
        )

    def contents(self) -> TransitionBatch:
        """Everything currently stored, oldest first."""
        if self.size < self.capacity:
            idx = np.arange(self.size)
        else:
            idx = np.roll(np.arange(self.capacity), -self._cursor)
        return self._gather(idx)
