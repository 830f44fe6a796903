"""Minimal dense-network numerics.

Fixed-topology MLPs (ReLU hidden layers, linear or tanh-bounded output head)
stored as plain float64 numpy arrays, with hand-written forward/backward
passes, a bias-corrected Adam optimizer, soft target updates, a central
finite-difference gradient checker, and a bit-exact binary snapshot format.

Everything here is deterministic given (seed, inputs) and uses value
semantics except where an update is explicitly documented as in-place.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

FINAL_LAYER_INIT_BOUND = 3e-3

_SNAPSHOT_MAGIC = b"MLP1"


@dataclass(frozen=True)
class NetConfig:
    """Topology of a dense network.

    layer_sizes lists every layer width from input to output, e.g.
    (3, 64, 64, 1).  Hidden activations are ReLU.  The output head is
    either "linear" or "bounded"; a bounded head applies
    output_scale * tanh(pre_activation).
    """

    layer_sizes: tuple[int, ...]
    output_head: str = "linear"
    output_scale: float = 1.0

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least input and output layer sizes")
        if any(int(s) < 1 for s in self.layer_sizes):
            raise ValueError(f"all layer sizes must be >= 1, got {self.layer_sizes}")
        if self.output_head not in ("linear", "bounded"):
            raise ValueError(f"unknown output head {self.output_head!r}")
        if self.output_head == "bounded" and not self.output_scale > 0:
            raise ValueError("bounded head needs output_scale > 0")
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1


@dataclass
class NetworkParams:
    """Per-layer weight matrices (out x in) and bias vectors (out,)."""

    config: NetConfig
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def validate(self) -> None:
        sizes = self.config.layer_sizes
        if len(self.weights) != self.config.n_layers or len(self.biases) != self.config.n_layers:
            raise ValueError("layer count mismatch with config")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[l + 1], sizes[l]) or b.shape != (sizes[l + 1],):
                raise ValueError(f"layer {l} shape mismatch: {w.shape}, {b.shape}")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"non-finite entries in layer {l}")

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            self.config,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    def flat(self) -> np.ndarray:
        """All parameters concatenated (row-major weights, then bias, per layer)."""
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)


@dataclass
class Gradients:
    """Gradient arrays, shape-identical to the owning NetworkParams."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def scale(self, factor: float) -> "Gradients":
        for w in self.weights:
            w *= factor
        for b in self.biases:
            b *= factor
        return self


@dataclass
class AdamState:
    """First/second moment accumulators plus the step counter."""

    m_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_w: list[np.ndarray]
    v_b: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: NetworkParams) -> "AdamState":
        return cls(
            m_w=[np.zeros_like(w) for w in params.weights],
            m_b=[np.zeros_like(b) for b in params.biases],
            v_w=[np.zeros_like(w) for w in params.weights],
            v_b=[np.zeros_like(b) for b in params.biases],
        )


@dataclass
class ForwardCache:
    """Intermediates from forward() needed by backward()."""

    inputs: list[np.ndarray] = field(default_factory=list)   # input to each layer, 2-D
    pres: list[np.ndarray] = field(default_factory=list)     # pre-activation of each layer, 2-D
    single: bool = True                                      # caller passed a 1-D vector


def init_params(config: NetConfig, seed: int) -> NetworkParams:
    """Random parameters: U[-1/sqrt(fan_in), +1/sqrt(fan_in)] per layer,
    final layer tightened to U[-3e-3, +3e-3] (weights and biases alike)."""
    rng = np.random.default_rng(seed)
    sizes = config.layer_sizes
    weights, biases = [], []
    for l in range(config.n_layers):
        fan_in = sizes[l]
        bound = 1.0 / np.sqrt(fan_in)
        if l == config.n_layers - 1:
            bound = min(bound, FINAL_LAYER_INIT_BOUND)
        weights.append(rng.uniform(-bound, bound, size=(sizes[l + 1], fan_in)))
        biases.append(rng.uniform(-bound, bound, size=sizes[l + 1]))
    return NetworkParams(config, weights, biases)


def forward(params: NetworkParams, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Evaluate the network.

    x is a vector (in_dim,) or a batch (B, in_dim); the output matches
    (out_dim,) or (B, out_dim).  The cache holds what backward() needs.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    a = x.reshape(1, -1) if single else x
    if a.shape[1] != params.config.in_dim:
        raise ValueError(f"input dim {a.shape[1]} != expected {params.config.in_dim}")
    cache = ForwardCache(single=single)
    n = params.config.n_layers
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        cache.inputs.append(a)
        z = a @ w.T + b
        cache.pres.append(z)
        if l < n - 1:
            a = np.maximum(z, 0.0)
        elif params.config.output_head == "bounded":
            a = params.config.output_scale * np.tanh(z)
        else:
            a = z
    return (a[0] if single else a), cache


def backward(
    params: NetworkParams, cache: ForwardCache, output_grad: np.ndarray
) -> tuple[Gradients, np.ndarray]:
    """Exact gradients of sum(output * output_grad) w.r.t. every parameter.

    output_grad matches the forward output shape (per-row for a batch;
    parameter gradients are summed over rows).  Also returns the gradient
    w.r.t. the network input, which the actor update needs as dQ/da.
    """
    g = np.asarray(output_grad, dtype=np.float64)
    if cache.single:
        g = g.reshape(1, -1)
    n = params.config.n_layers
    gw: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    gb: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    if params.config.output_head == "bounded":
        th = np.tanh(cache.pres[-1])
        gz = g * (params.config.output_scale * (1.0 - th * th))
    else:
        gz = g
    for l in range(n - 1, -1, -1):
        gw[l] = gz.T @ cache.inputs[l]
        gb[l] = gz.sum(axis=0)
        ga = gz @ params.weights[l]
        if l > 0:
            gz = ga * (cache.pres[l - 1] > 0.0)
    input_grad = ga[0] if cache.single else ga
    return Gradients(gw, gb), input_grad


def adam_step(
    params: NetworkParams,
    grads: Gradients,
    state: AdamState,
    lr: float,
) -> tuple[NetworkParams, AdamState]:
    """One bias-corrected Adam step (in-place on params and state)."""
    state.t += 1
    c1 = 1.0 - ADAM_BETA1 ** state.t
    c2 = 1.0 - ADAM_BETA2 ** state.t
    for w, g, m, v in zip(params.weights, grads.weights, state.m_w, state.v_w):
        _adam_update(w, g, m, v, lr, c1, c2)
    for b, g, m, v in zip(params.biases, grads.biases, state.m_b, state.v_b):
        _adam_update(b, g, m, v, lr, c1, c2)
    return params, state


def _adam_update(p, g, m, v, lr, c1, c2):
    m *= ADAM_BETA1
    m += (1.0 - ADAM_BETA1) * g
    v *= ADAM_BETA2
    v += (1.0 - ADAM_BETA2) * (g * g)
    p -= lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)


def soft_update(target: NetworkParams, source: NetworkParams, tau: float) -> NetworkParams:
    """Elementwise target <- tau*source + (1-tau)*target (in-place on target)."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    if target.config.layer_sizes != source.config.layer_sizes:
        raise ValueError("network shapes differ")
    for tw, sw in zip(target.weights, source.weights):
        if tw.shape != sw.shape:
            raise ValueError("weight shape mismatch")
        tw *= 1.0 - tau
        tw += tau * sw
    for tb, sb in zip(target.biases, source.biases):
        tb *= 1.0 - tau
        tb += tau * sb
    return target


def grad_check(config: NetConfig, seed: int, h: float = 1e-5) -> float:
    """Compare backward() against central finite differences over all parameters.

    Intended for small nets.  Returns the largest per-parameter error
    normalized by the infinity norm of the gradient vector.  Parameters whose
    +-h perturbation flips a ReLU activation pattern are skipped: finite
    differences are invalid across a kink.
    """
    rng = np.random.default_rng(seed)
    params = init_params(config, int(rng.integers(2**63)))
    x = rng.standard_normal(config.in_dim)
    out_w = rng.standard_normal(config.out_dim)

    y, cache = forward(params, x)
    grads, _ = backward(params, cache, out_w)
    base_masks = [p > 0.0 for p in cache.pres[:-1]]

    def objective_and_masks(ps):
        yy, cc = forward(ps, x)
        return float(yy @ out_w), [p > 0.0 for p in cc.pres[:-1]]

    analytic = np.concatenate([g.ravel() for g in grads.weights + grads.biases])
    gscale = max(np.abs(analytic).max(), 1e-12)

    max_err = 0.0
    arrays = params.weights + params.biases
    grad_arrays = grads.weights + grads.biases
    for arr, ga in zip(arrays, grad_arrays):
        flat = arr.reshape(-1)
        gflat = ga.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp, masks_p = objective_and_masks(params)
            flat[i] = orig - h
            lm, masks_m = objective_and_masks(params)
            flat[i] = orig
            if any(
                (mp != mb).any() or (mm != mb).any()
                for mp, mm, mb in zip(masks_p, masks_m, base_masks)
            ):
                continue
            fd = (lp - lm) / (2.0 * h)
            max_err = max(max_err, abs(gflat[i] - fd) / gscale)
    return max_err


def grad_check_suite(n_nets: int, seed: int, h: float = 1e-5) -> float:
    """grad_check over randomly drawn small topologies (1-2 hidden layers of
    4-16 units, both output heads); returns the worst error seen."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_nets):
        sizes = [int(rng.integers(2, 7))]
        sizes += [int(rng.integers(4, 17)) for _ in range(int(rng.integers(1, 3)))]
        sizes.append(int(rng.integers(1, 4)))
        head = "bounded" if rng.integers(2) else "linear"
        cfg = NetConfig(tuple(sizes), output_head=head,
                        output_scale=float(rng.uniform(0.5, 3.0)))
        worst = max(worst, grad_check(cfg, seed=int(rng.integers(2**63)), h=h))
    return worst


def save_params(params: NetworkParams, path) -> None:
    """Write a bit-exact binary snapshot (schema documented in the README)."""
    cfg = params.config
    head = 0 if cfg.output_head == "linear" else 1
    with open(path, "wb") as f:
        f.write(_SNAPSHOT_MAGIC)
        f.write(struct.pack("<IId", cfg.n_layers, head, cfg.output_scale))
        for w in params.weights:
            f.write(struct.pack("<II", w.shape[0], w.shape[1]))
        for w, b in zip(params.weights, params.biases):
            f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_params(path) -> NetworkParams:
    """Read a snapshot written by save_params, bit-exactly."""
    with open(path, "rb") as f:
        if f.read(4) != _SNAPSHOT_MAGIC:
            raise ValueError(f"{path}: not a parameter snapshot")
        n_layers, head, scale = struct.unpack("<IId", f.read(16))
        shapes = [struct.unpack("<II", f.read(8)) for _ in range(n_layers)]
        sizes = [shapes[0][1]] + [s[0] for s in shapes]
        cfg = NetConfig(
            layer_sizes=tuple(sizes),
            output_head="linear" if head == 0 else "bounded",
            output_scale=scale,
        )
        weights, biases = [], []
        for out, inp in shapes:
            weights.append(
                np.frombuffer(f.read(8 * out * inp), dtype="<f8").reshape(out, inp).copy()
            )
            biases.append(np.frombuffer(f.read(8 * out), dtype="<f8").copy())
    params = NetworkParams(cfg, weights, biases)
    params.validate()
    return params
