"""Fixed-topology MLPs with hand-rolled reverse-mode gradients and Adam.

Everything is float64. The actor head emits categorical logits; the critic
head emits a single linear value. Gradients are exact and hard-wired to the
feed-forward topology (no generic autodiff graph).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_ACTIVATIONS = {
    "relu": (lambda z: np.maximum(z, 0.0), lambda z: (z > 0.0).astype(np.float64)),
    "tanh": (np.tanh, lambda z: 1.0 - np.tanh(z) ** 2),
}


@dataclass
class Gradients:
    """Per-parameter gradient arrays, shape-matching an Mlp."""

    d_weights: list[np.ndarray]
    d_biases: list[np.ndarray]

    def check_finite(self) -> None:
        for g in self.d_weights + self.d_biases:
            if not np.all(np.isfinite(g)):
                raise ValueError("non-finite gradient entry")


class Mlp:
    """Feed-forward network: input -> hidden stack -> linear output layer.

    ``weights[l]`` has shape (sizes[l+1], sizes[l]); forward maps are
    z = W h + b with the hidden nonlinearity applied everywhere except the
    output layer.
    """

    def __init__(self, layer_sizes: list[int], output_kind: str = "logits",
                 hidden_activation: str = "relu", seed: int = 0):
        if len(layer_sizes) < 2 or any(s < 1 for s in layer_sizes):
            raise ValueError("layer_sizes must be >= 2 positive integers")
        if output_kind not in ("logits", "value"):
            raise ValueError(f"unknown output_kind: {output_kind}")
        if hidden_activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation: {hidden_activation}")
        self.layer_sizes = list(layer_sizes)
        self.output_kind = output_kind
        self.hidden_activation = hidden_activation
        rng = np.random.default_rng(seed)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
            self.biases.append(np.zeros(fan_out))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "Mlp":
        clone = Mlp(self.layer_sizes, self.output_kind, self.hidden_activation)
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the network on a single vector or a batch of rows."""
        out, _ = self.forward_cache(x)
        return out

    def forward_cache(self, x: np.ndarray):
        """Forward pass keeping pre-activations and layer inputs for backward."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        h = x[None, :] if single else x
        if h.shape[1] != self.layer_sizes[0]:
            raise ValueError(f"expected input of size {self.layer_sizes[0]}, "
                             f"got {h.shape[1]}")
        act, _ = _ACTIVATIONS[self.hidden_activation]
        inputs = []   # input to each layer
        preacts = []  # pre-activation of each hidden layer
        for l in range(self.n_layers):
            inputs.append(h)
            z = h @ self.weights[l].T + self.biases[l]
            if l < self.n_layers - 1:
                preacts.append(z)
                h = act(z)
            else:
                h = z
        out = h[0] if single else h
        return out, (inputs, preacts, single)

    def backward(self, cache, output_gradient: np.ndarray) -> Gradients:
        """Exact gradients of sum_i <output_gradient_i, output_i> w.r.t. parameters.

        ``output_gradient`` must match the forward output shape; batch rows are
        summed, so scale it by 1/N beforehand for a mean loss.
        """
        inputs, preacts, single = cache
        g = np.asarray(output_gradient, dtype=np.float64)
        if single:
            g = g[None, :]
        if g.shape != (inputs[-1].shape[0], self.layer_sizes[-1]):
            raise ValueError("output_gradient shape mismatch")
        _, dact = _ACTIVATIONS[self.hidden_activation]
        d_weights = [np.empty(0)] * self.n_layers
        d_biases = [np.empty(0)] * self.n_layers
        delta = g
        for l in range(self.n_layers - 1, -1, -1):
            d_weights[l] = delta.T @ inputs[l]
            d_biases[l] = delta.sum(axis=0)
            if l > 0:
                delta = (delta @ self.weights[l]) * dact(preacts[l - 1])
        return Gradients(d_weights, d_biases)

    def zero_gradients(self) -> Gradients:
        return Gradients([np.zeros_like(w) for w in self.weights],
                         [np.zeros_like(b) for b in self.biases])


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable log-softmax along the last axis."""
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


class AdamState:
    """Adam optimizer state for one Mlp (bias-corrected moments)."""

    def __init__(self, net: Mlp, learning_rate: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m_w = [np.zeros_like(w) for w in net.weights]
        self.v_w = [np.zeros_like(w) for w in net.weights]
        self.m_b = [np.zeros_like(b) for b in net.biases]
        self.v_b = [np.zeros_like(b) for b in net.biases]

    def step(self, net: Mlp, grads: Gradients) -> None:
        """One in-place Adam update of ``net`` from ``grads``."""
        grads.check_finite()
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for l in range(net.n_layers):
            for params, m, v, g in ((net.weights, self.m_w, self.v_w, grads.d_weights),
                                    (net.biases, self.m_b, self.v_b, grads.d_biases)):
                m[l] = self.beta1 * m[l] + (1.0 - self.beta1) * g[l]
                v[l] = self.beta2 * v[l] + (1.0 - self.beta2) * g[l] ** 2
                params[l] -= self.learning_rate * (m[l] / c1) / (np.sqrt(v[l] / c2) + self.eps)


_FORMAT_TAG = "cmdp-mlp"
_FORMAT_VERSION = 1


def save_mlp(net: Mlp, path: str) -> None:
    """Write the network as versioned decimal text (17 significant digits)."""
    lines = [f"{_FORMAT_TAG} {_FORMAT_VERSION}",
             " ".join(str(s) for s in net.layer_sizes),
             f"{net.output_kind} {net.hidden_activation}"]
    for w, b in zip(net.weights, net.biases):
        for row in w:
            lines.append(" ".join(f"{x:.17g}" for x in row))
        lines.append(" ".join(f"{x:.17g}" for x in b))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mlp(path: str) -> Mlp:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    tag, version = lines[0].split()
    if tag != _FORMAT_TAG or int(version) != _FORMAT_VERSION:
        raise ValueError(f"unrecognized model format: {lines[0]!r}")
    sizes = [int(s) for s in lines[1].split()]
    kind, activation = lines[2].split()
    net = Mlp(sizes, kind, activation)
    pos = 3
    for l, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        rows = [np.array(lines[pos + r].split(), dtype=np.float64)
                for r in range(fan_out)]
        net.weights[l] = np.vstack(rows)
        net.biases[l] = np.array(lines[pos + fan_out].split(), dtype=np.float64)
        if net.weights[l].shape != (fan_out, fan_in) or net.biases[l].shape != (fan_out,):
            raise ValueError("model file shape mismatch")
        pos += fan_out + 1
    return net
