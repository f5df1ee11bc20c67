"""Dense layers and small feed-forward stacks with explicit backward passes.

Everything is plain numpy. Models keep parameters as attributes, expose them
through parameters()/gradients() in a stable order, and accumulate gradients
on backward; optimizers consume the same ordering.
"""

from __future__ import annotations

import numpy as np


def elu(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def elu_grad(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0)))


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


class Module:
    """Base: stable parameter ordering, flat vector get/set, grad reset."""

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        raise NotImplementedError

    def gradients(self) -> list[tuple[str, np.ndarray]]:
        raise NotImplementedError

    def zero_grads(self) -> None:
        for _, g in self.gradients():
            g[...] = 0.0

    def param_vector(self) -> np.ndarray:
        return np.concatenate([p.ravel() for _, p in self.parameters()])

    def grad_vector(self) -> np.ndarray:
        return np.concatenate([g.ravel() for _, g in self.gradients()])

    def set_param_vector(self, v: np.ndarray) -> None:
        i = 0
        for _, p in self.parameters():
            n = p.size
            p[...] = v[i : i + n].reshape(p.shape)
            i += n
        if i != v.size:
            raise ValueError(f"parameter vector size mismatch: {v.size} vs {i}")

    def param_count(self) -> int:
        return sum(p.size for _, p in self.parameters())


def he_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / max(fan_in, 1))
    return rng.uniform(-bound, bound, shape)


class Dense(Module):
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, name: str = "dense"):
        self.name = name
        self.w = he_uniform(rng, (out_dim, in_dim), in_dim)
        self.b = np.zeros(out_dim)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._x: np.ndarray | None = None

    @property
    def in_dim(self) -> int:
        return self.w.shape[1]

    @property
    def out_dim(self) -> int:
        return self.w.shape[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[-1] != self.in_dim:
            raise ValueError(
                f"{self.name}: input dim {x.shape[-1]} != expected {self.in_dim}"
            )
        self._x = x
        return x @ self.w.T + self.b

    def backward(self, dy: np.ndarray) -> np.ndarray:
        x = self._x
        self.dw += dy.reshape(-1, self.out_dim).T @ x.reshape(-1, self.in_dim)
        self.db += dy.reshape(-1, self.out_dim).sum(axis=0)
        return dy @ self.w

    def parameters(self):
        return [(f"{self.name}.w", self.w), (f"{self.name}.b", self.b)]

    def gradients(self):
        return [(f"{self.name}.w", self.dw), (f"{self.name}.b", self.db)]


class DenseNet(Module):
    """Fully-connected stack; ELU on hidden layers, linear (or softmax) output."""

    def __init__(
        self,
        dims: list[int],
        rng: np.random.Generator,
        name: str = "net",
        softmax_output: bool = False,
        elu_output: bool = False,
    ):
        if len(dims) < 2:
            raise ValueError("DenseNet needs at least input and output dims")
        self.name = name
        self.softmax_output = softmax_output
        self.elu_output = elu_output
        self.layers = [
            Dense(dims[i], dims[i + 1], rng, name=f"{name}.l{i}")
            for i in range(len(dims) - 1)
        ]
        self._cache: list[np.ndarray] = []
        self._out: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._cache = []
        h = x
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            z = layer.forward(h)
            if i < last or self.elu_output:
                self._cache.append(z)
                h = elu(z)
            else:
                h = z
        if self.softmax_output:
            h = softmax(h)
            self._out = h
        return h

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self.softmax_output:
            s = self._out
            dy = s * (dy - np.sum(dy * s, axis=-1, keepdims=True))
        last = len(self.layers) - 1
        cache_i = len(self._cache) - 1
        for i in range(last, -1, -1):
            if i < last or self.elu_output:
                dy = dy * elu_grad(self._cache[cache_i])
                cache_i -= 1
            dy = self.layers[i].backward(dy)
        return dy

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]

    def gradients(self):
        return [g for layer in self.layers for g in layer.gradients()]
