"""Fully-connected tanh networks, Glorot-uniform init, and the Adam optimizer.

Parameters are plain numpy arrays collected in :class:`MlpParams`; the same
arrays double as leaf bindings for the autodiff graphs that the training loop
differentiates. tanh is applied on every layer including the last one; output
lifting and scaling elsewhere restore unbounded physical ranges.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import ArgumentError, NumericalError, ShapeError


@dataclass(frozen=True)
class MlpParams:
    widths: tuple
    weights: tuple  # weights[l] has shape (widths[l], widths[l+1])
    biases: tuple   # biases[l] has shape (widths[l+1],)

    def __post_init__(self):
        if len(self.weights) != len(self.widths) - 1 or \
                len(self.biases) != len(self.widths) - 1:
            raise ShapeError("layer count does not match widths")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.widths[l], self.widths[l + 1]) or \
                    b.shape != (self.widths[l + 1],):
                raise ShapeError(f"layer {l} has shape {w.shape}/{b.shape}, "
                                 f"expected {(self.widths[l], self.widths[l + 1])}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise NumericalError(f"layer {l} contains non-finite entries")

    @property
    def in_width(self) -> int:
        return self.widths[0]

    @property
    def out_width(self) -> int:
        return self.widths[-1]


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 1000
    seed: int = 0
    lambda_data: float = 1.0
    lambda_var: float = 1.0
    displacement_scale: float = 1e-2   # s_u applied to raw elastic outputs
    energy_scale: float | None = None  # H_ref; None = max over the training set

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ArgumentError("learning rate must be > 0")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ArgumentError("Adam betas must be in [0, 1)")
        if self.eps <= 0.0:
            raise ArgumentError("Adam eps must be > 0")
        if self.epochs < 0:
            raise ArgumentError("epoch count must be >= 0")


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0


def xavier_init(layer_widths, seed: int) -> MlpParams:
    """Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)); zero biases."""
    widths = tuple(int(w) for w in layer_widths)
    if len(widths) < 2 or any(w <= 0 for w in widths):
        raise ArgumentError(f"need >= 2 positive layer widths, got {layer_widths}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(widths, tuple(weights), tuple(biases))


def mlp_forward(params: MlpParams, batch: np.ndarray) -> np.ndarray:
    """Plain numpy forward pass; tanh on every layer including the last."""
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.in_width:
        raise ShapeError(f"batch shape {x.shape} does not match input width "
                         f"{params.in_width}")
    for w, b in zip(params.weights, params.biases):
        x = np.tanh(x @ w + b)
    return x


def mlp_graph_layers(input_node: ad.Node, widths, prefix: str):
    """Symbolic forward pass returning every activation plus the weight leaves.

    The intermediate activations are needed by the closed-form propagation of
    coordinate derivatives through the trunk network.
    """
    activations = [input_node]
    weight_leaves = []
    x = input_node
    for l in range(len(widths) - 1):
        w = ad.leaf(f"{prefix}.W{l}", (widths[l], widths[l + 1]))
        b = ad.leaf(f"{prefix}.b{l}", (widths[l + 1],))
        x = ad.tanh(ad.add(ad.matmul(x, w), b))
        activations.append(x)
        weight_leaves.append(w)
    return activations, weight_leaves


def param_bindings(params: MlpParams, prefix: str) -> dict:
    """Leaf bindings matching the naming of :func:`mlp_graph_layers`."""
    out = {}
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        out[f"{prefix}.W{l}"] = w
        out[f"{prefix}.b{l}"] = b
    return out


def params_from_bindings(bindings: dict, widths, prefix: str) -> MlpParams:
    n_layers = len(widths) - 1
    weights = tuple(bindings[f"{prefix}.W{l}"] for l in range(n_layers))
    biases = tuple(bindings[f"{prefix}.b{l}"] for l in range(n_layers))
    return MlpParams(tuple(widths), weights, biases)


def adam_update(params: dict, grads: dict, state: AdamState,
                config: TrainingConfig):
    """One Adam step over a dict of named parameter arrays. Pure function."""
    if set(params) != set(grads):
        raise ShapeError("parameter and gradient names differ")
    new_m, new_v, new_p = {}, {}, {}
    t = state.t + 1
    b1, b2 = config.beta1, config.beta2
    for name in sorted(params):
        p, g = params[name], grads[name]
        if p.shape != g.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape "
                             f"{p.shape} for '{name}'")
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient for '{name}'")
        m = state.m.get(name, np.zeros_like(p))
        v = state.v.get(name, np.zeros_like(p))
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        new_p[name] = p - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)
        new_m[name], new_v[name] = m, v
    return new_p, AdamState(new_m, new_v, t)


def adam_step(params: MlpParams, grads: MlpParams, state: AdamState,
              config: TrainingConfig):
    """Adam step on a single network; wraps :func:`adam_update`."""
    p = param_bindings(params, "net")
    g = param_bindings(grads, "net")
    new_p, new_state = adam_update(p, g, state, config)
    return params_from_bindings(new_p, params.widths, "net"), new_state


def mlp_to_record(params: MlpParams) -> dict:
    """JSON-ready record: widths then row-major weights/biases per layer."""
    return {
        "widths": list(params.widths),
        "layers": [
            {"weight": w.reshape(-1).tolist(), "bias": b.tolist()}
            for w, b in zip(params.weights, params.biases)
        ],
    }


def mlp_from_record(record: dict) -> MlpParams:
    widths = tuple(int(w) for w in record["widths"])
    weights, biases = [], []
    for l, layer in enumerate(record["layers"]):
        shape = (widths[l], widths[l + 1])
        weights.append(np.asarray(layer["weight"], dtype=np.float64).reshape(shape))
        biases.append(np.asarray(layer["bias"], dtype=np.float64))
    return MlpParams(widths, tuple(weights), tuple(biases))
