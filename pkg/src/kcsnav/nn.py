"""Small fully connected networks with hand-written backpropagation, and Adam."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class Mlp:
    """Feed-forward net with tanh hidden layers.

    ``output_activation`` is ``"tanh"`` (scaled by ``output_scale``) or
    ``"linear"``. Parameters are stored as ``[W0, b0, W1, b1, ...]`` with
    ``W`` of shape (fan_in, fan_out) and inputs as row vectors.
    """

    def __init__(
        self,
        layer_sizes,
        output_activation: str = "linear",
        output_scale: float = 1.0,
        params: list[np.ndarray] | None = None,
    ):
        if output_activation not in ("tanh", "linear"):
            raise ValueError(f"unknown output activation {output_activation!r}")
        self.layer_sizes = [int(n) for n in layer_sizes]
        self.output_activation = output_activation
        self.output_scale = float(output_scale)
        if params is None:
            params = []
            for n_in, n_out in zip(self.layer_sizes, self.layer_sizes[1:]):
                params += [np.zeros((n_in, n_out)), np.zeros(n_out)]
        self.params = [np.array(p, dtype=float) for p in params]
        for i, (n_in, n_out) in enumerate(zip(self.layer_sizes, self.layer_sizes[1:])):
            if self.params[2 * i].shape != (n_in, n_out) or self.params[2 * i + 1].shape != (n_out,):
                raise ValueError(f"parameter shapes do not match layer {i}")

    @classmethod
    def initialized(cls, layer_sizes, rng, output_activation="linear", output_scale=1.0, final_init=3e-3):
        """Uniform +-1/sqrt(fan_in) init; final layer +-``final_init``."""
        net = cls(layer_sizes, output_activation, output_scale)
        n_layers = len(net.layer_sizes) - 1
        for i in range(n_layers):
            n_in, n_out = net.layer_sizes[i], net.layer_sizes[i + 1]
            bound = final_init if i == n_layers - 1 else 1.0 / math.sqrt(n_in)
            net.params[2 * i] = rng.uniform(-bound, bound, size=(n_in, n_out))
            net.params[2 * i + 1] = rng.uniform(-bound, bound, size=n_out)
        return net

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    def output_preactivation(self, acts: list[np.ndarray]) -> np.ndarray:
        """Pre-activation of the output layer from kept activations."""
        return acts[-2] @ self.params[-2] + self.params[-1]

    def copy(self) -> "Mlp":
        return Mlp(self.layer_sizes, self.output_activation, self.output_scale,
                   [p.copy() for p in self.params])

    def forward(self, x: np.ndarray, keep: bool = False):
        """Evaluate on a batch (or single row). With ``keep`` also return the
        activations needed by :meth:`backward`."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.layer_sizes[0]:
            raise ValueError(f"expected input width {self.layer_sizes[0]}, got {x.shape[1]}")
        acts = [x]
        h = x
        for i in range(self.n_layers):
            z = h @ self.params[2 * i] + self.params[2 * i + 1]
            if i < self.n_layers - 1 or self.output_activation == "tanh":
                h = np.tanh(z)
            else:
                h = z
            acts.append(h)
        out = h * self.output_scale if self.output_activation == "tanh" else h
        if single and not keep:
            out = out[0]
        return (out, acts) if keep else out

    def backward(self, acts: list[np.ndarray], grad_out: np.ndarray, grad_preact=None):
        """Gradients of a scalar loss given dLoss/dOutput for each batch row.

        ``grad_preact`` optionally adds a loss term's gradient with respect
        to the output layer's pre-activation. Returns ``(param_grads, grad_input)``.
        """
        g = np.asarray(grad_out, dtype=float)
        if g.ndim == 1:
            g = g[:, None]
        grads: list[np.ndarray] = [None] * len(self.params)  # type: ignore[list-item]
        last = self.n_layers - 1
        for i in range(last, -1, -1):
            a = acts[i + 1]
            if i == last:
                if self.output_activation == "tanh":
                    g = g * self.output_scale * (1.0 - a * a)
                if grad_preact is not None:
                    gp = np.asarray(grad_preact, dtype=float)
                    g = g + (gp[:, None] if gp.ndim == 1 else gp)
            else:
                g = g * (1.0 - a * a)
            grads[2 * i] = acts[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.params[2 * i].T
        return grads, g


@dataclass
class Adam:
    """Adam with bias correction; moments shaped like the parameter list."""

    lr: float = 8e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        """Update ``params`` in place."""
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        if len(grads) != len(params):
            raise ValueError("gradient list does not match parameters")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if g.shape != p.shape:
                raise ValueError("gradient shape mismatch")
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
