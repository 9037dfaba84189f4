"""Dense networks with hand-written backpropagation, plus Adam."""
from dataclasses import dataclass

import numpy as np

from ..errors import NumericOverflowError

SIGMOID_CLAMP = 30.0
ACTIVATIONS = ("relu", "tanh", "sigmoid", "identity")


@dataclass
class Dense:
    W: np.ndarray  # (in, out)
    b: np.ndarray  # (out,)
    activation: str = "identity"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        self.W = np.asarray(self.W, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[1],):
            raise ValueError(f"bias shape {self.b.shape} does not match weights {self.W.shape}")


class MlpNet:
    """Stack of :class:`Dense` layers applied to row batches."""

    def __init__(self, layers):
        self.layers = list(layers)
        if not self.layers:
            raise ValueError("network needs at least one layer")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.W.shape[1] != b.W.shape[0]:
                raise ValueError(f"layer widths do not chain: {a.W.shape} -> {b.W.shape}")

    @property
    def input_dim(self):
        return self.layers[0].W.shape[0]

    @property
    def output_dim(self):
        return self.layers[-1].W.shape[1]

    def params(self):
        """Parameter arrays in a fixed order (W0, b0, W1, b1, ...); views, not copies."""
        out = []
        for layer in self.layers:
            out.extend((layer.W, layer.b))
        return out

    def copy(self):
        return MlpNet([Dense(l.W.copy(), l.b.copy(), l.activation) for l in self.layers])

    def to_dict(self):
        return {
            "layers": [
                {
                    "rows": int(l.W.shape[0]),
                    "cols": int(l.W.shape[1]),
                    "weights": l.W.tolist(),
                    "bias": l.b.tolist(),
                    "activation": l.activation,
                }
                for l in self.layers
            ]
        }

    @classmethod
    def from_dict(cls, doc):
        layers = []
        for spec in doc["layers"]:
            W = np.asarray(spec["weights"], dtype=float).reshape(spec["rows"], spec["cols"])
            layers.append(Dense(W, np.asarray(spec["bias"], dtype=float), spec["activation"]))
        return cls(layers)


def init_mlp(sizes, activations, rng):
    """Glorot-uniform weights (He-uniform ahead of relu), zero biases."""
    if len(activations) != len(sizes) - 1:
        raise ValueError("need one activation per layer")
    layers = []
    for fan_in, fan_out, act in zip(sizes[:-1], sizes[1:], activations):
        limit = np.sqrt(6.0 / fan_in) if act == "relu" else np.sqrt(6.0 / (fan_in + fan_out))
        layers.append(Dense(rng.uniform(-limit, limit, (fan_in, fan_out)), np.zeros(fan_out), act))
    return MlpNet(layers)


def _activate(z, act):
    if act == "relu":
        return np.maximum(z, 0.0)
    if act == "tanh":
        return np.tanh(z)
    if act == "sigmoid":
        return 1.0 / (1.0 + np.exp(-np.clip(z, -SIGMOID_CLAMP, SIGMOID_CLAMP)))
    return z


def _activation_grad(z, a, act):
    if act == "relu":
        return (z > 0).astype(float)
    if act == "tanh":
        return 1.0 - a * a
    if act == "sigmoid":
        # the clamp is flat outside [-30, 30]
        return a * (1.0 - a) * (np.abs(z) <= SIGMOID_CLAMP)
    return np.ones_like(z)


def forward(net, batch, keep=False):
    """Apply ``net`` to the rows of ``batch``.

    With ``keep=True`` also returns the per-layer (input, pre-activation,
    output) cache that :func:`backward` consumes.
    """
    a = np.asarray(batch, dtype=float)
    if a.ndim != 2 or a.shape[1] != net.input_dim:
        raise ValueError(f"batch must have {net.input_dim} columns, got shape {a.shape}")
    cache = []
    for i, layer in enumerate(net.layers):
        with np.errstate(over="ignore", invalid="ignore"):
            z = a @ layer.W + layer.b
            out = _activate(z, layer.activation)
        if not np.all(np.isfinite(out)):
            raise NumericOverflowError(i)
        if keep:
            cache.append((a, z, out))
        a = out
    return (a, cache) if keep else a


def backward(net, cache, grad_out):
    """Gradients of a scalar loss given dloss/doutput.

    Returns ``(param_grads, grad_input)`` with ``param_grads`` aligned with
    ``net.params()``.
    """
    grads = [None] * (2 * len(net.layers))
    g = grad_out
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        a_in, z, out = cache[i]
        dz = g * _activation_grad(z, out, layer.activation)
        grads[2 * i] = a_in.T @ dz
        grads[2 * i + 1] = dz.sum(axis=0)
        g = dz @ layer.W.T
    return grads, g


class Adam:
    """Adam with bias correction; updates parameter arrays in place."""

    def __init__(self, params, lr=2e-4, beta1=0.5, beta2=0.999, eps=1e-8):
        if lr <= 0 or not (0 <= beta1 < 1 and 0 <= beta2 < 1):
            raise ValueError("invalid Adam hyperparameters")
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
