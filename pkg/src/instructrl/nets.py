"""Small feedforward networks with hand-written backpropagation.

Gradients are computed analytically (no autodiff dependency) and are checked
against central finite differences in the test suite. Everything runs in
float64 so the checks are tight.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractViolation


class Mlp:
    """ReLU MLP with a linear output layer.

    ``sizes`` lists the layer widths, input first, e.g. ``[84, 64, 64, 11]``.
    Weights use He-normal initialization from the supplied generator; biases
    start at zero.
    """

    def __init__(self, sizes, rng: np.random.Generator | None = None):
        if len(sizes) < 2:
            raise ContractViolation("need at least an input and an output layer")
        self.sizes = [int(s) for s in sizes]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.sizes, self.sizes[1:]):
            if rng is None:
                w = np.zeros((fan_in, fan_out))
            else:
                w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def forward(self, x: np.ndarray):
        """Return (output, cache). ``x`` is (batch, in) or a single (in,) row."""
        squeeze = x.ndim == 1
        h = x.reshape(1, -1) if squeeze else x
        pre: list[np.ndarray] = []
        post = [h]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = post[-1] @ w + b
            pre.append(z)
            post.append(np.maximum(z, 0.0) if i < self.n_layers - 1 else z)
        out = post[-1][0] if squeeze else post[-1]
        return out, (pre, post)

    def backward(self, cache, dout: np.ndarray):
        """Gradients of a scalar loss given d(loss)/d(output)."""
        pre, post = cache
        if dout.ndim == 1:
            dout = dout.reshape(1, -1)
        grads_w = [np.empty_like(w) for w in self.weights]
        grads_b = [np.empty_like(b) for b in self.biases]
        delta = dout
        for i in reversed(range(self.n_layers)):
            if i < self.n_layers - 1:
                delta = delta * (pre[i] > 0.0)
            grads_w[i] = post[i].T @ delta
            grads_b[i] = delta.sum(axis=0)
            delta = delta @ self.weights[i].T
        return grads_w, grads_b

    # -- parameter plumbing -------------------------------------------------

    @property
    def n_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def get_vector(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.weights + self.biases])

    def set_vector(self, vec: np.ndarray) -> None:
        if vec.size != self.n_params:
            raise ContractViolation(f"expected {self.n_params} params, got {vec.size}")
        offset = 0
        for arr in self.weights + self.biases:
            arr[...] = vec[offset: offset + arr.size].reshape(arr.shape)
            offset += arr.size

    def copy(self) -> "Mlp":
        clone = Mlp(self.sizes)
        clone.set_vector(self.get_vector())
        return clone


def global_norm(grads_w, grads_b) -> float:
    total = 0.0
    for g in list(grads_w) + list(grads_b):
        total += float(np.sum(g * g))
    return float(np.sqrt(total))


def clip_gradients(grads_w, grads_b, max_norm: float):
    norm = global_norm(grads_w, grads_b)
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        grads_w = [g * scale for g in grads_w]
        grads_b = [g * scale for g in grads_b]
    return grads_w, grads_b


class Adam:
    """Adam with optional global-norm gradient clipping."""

    def __init__(self, net: Mlp, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8, clip_norm: float = 5.0):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.clip_norm = clip_norm
        self.t = 0
        self.m = [np.zeros_like(a) for a in net.weights + net.biases]
        self.v = [np.zeros_like(a) for a in net.weights + net.biases]

    def step(self, net: Mlp, grads_w, grads_b) -> None:
        grads_w, grads_b = clip_gradients(grads_w, grads_b, self.clip_norm)
        self.t += 1
        params = net.weights + net.biases
        grads = list(grads_w) + list(grads_b)
        correction1 = 1.0 - self.beta1**self.t
        correction2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
