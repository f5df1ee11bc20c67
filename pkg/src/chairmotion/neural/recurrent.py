"""LSTM cell and a 2-layer recurrent stack with truncated BPTT support."""

from __future__ import annotations

import numpy as np

from .layers import Module, he_uniform


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -60.0, 60.0)))


class LSTMCell(Module):
    """Standard LSTM with gates ordered (input, forget, cell, output)."""

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator, name: str = "lstm"):
        self.name = name
        self.hidden = hidden
        self.wx = he_uniform(rng, (4 * hidden, in_dim), in_dim)
        self.wh = he_uniform(rng, (4 * hidden, hidden), hidden)
        self.b = np.zeros(4 * hidden)
        self.b[hidden : 2 * hidden] = 1.0  # forget-gate bias starts open
        self.dwx = np.zeros_like(self.wx)
        self.dwh = np.zeros_like(self.wh)
        self.db = np.zeros_like(self.b)
        self._steps: list[dict] = []

    def initial_state(self, batch: int) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros((batch, self.hidden)), np.zeros((batch, self.hidden))

    def step(
        self, x: np.ndarray, state: tuple[np.ndarray, np.ndarray], record: bool = False
    ) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray]]:
        h_prev, c_prev = state
        z = x @ self.wx.T + h_prev @ self.wh.T + self.b
        hd = self.hidden
        i = _sigmoid(z[..., :hd])
        f = _sigmoid(z[..., hd : 2 * hd])
        g = np.tanh(z[..., 2 * hd : 3 * hd])
        o = _sigmoid(z[..., 3 * hd :])
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        if record:
            self._steps.append(
                {"x": x, "h_prev": h_prev, "c_prev": c_prev, "i": i, "f": f,
                 "g": g, "o": o, "c": c, "tc": tc}
            )
        return h, (h, c)

    def reset_cache(self) -> None:
        self._steps = []

    def backward_sequence(self, d_h_seq: list[np.ndarray]) -> list[np.ndarray]:
        """BPTT over the recorded steps; d_h_seq is the per-step output grad.

        Returns per-step input gradients (same order as the forward steps).
        """
        t_steps = len(self._steps)
        if len(d_h_seq) != t_steps:
            raise ValueError("gradient sequence length mismatch")
        hd = self.hidden
        batch = self._steps[0]["x"].shape[0]
        dh_next = np.zeros((batch, hd))
        dc_next = np.zeros((batch, hd))
        dx_seq: list[np.ndarray] = [None] * t_steps
        for t in range(t_steps - 1, -1, -1):
            s = self._steps[t]
            dh = d_h_seq[t] + dh_next
            do = dh * s["tc"]
            dc = dh * s["o"] * (1.0 - s["tc"] ** 2) + dc_next
            di = dc * s["g"]
            df = dc * s["c_prev"]
            dg = dc * s["i"]
            dz = np.concatenate(
                [
                    di * s["i"] * (1.0 - s["i"]),
                    df * s["f"] * (1.0 - s["f"]),
                    dg * (1.0 - s["g"] ** 2),
                    do * s["o"] * (1.0 - s["o"]),
                ],
                axis=-1,
            )
            self.dwx += dz.T @ s["x"]
            self.dwh += dz.T @ s["h_prev"]
            self.db += dz.sum(axis=0)
            dx_seq[t] = dz @ self.wx
            dh_next = dz @ self.wh
            dc_next = dc * s["f"]
        self.reset_cache()
        return dx_seq

    def parameters(self):
        return [
            (f"{self.name}.wx", self.wx),
            (f"{self.name}.wh", self.wh),
            (f"{self.name}.b", self.b),
        ]

    def gradients(self):
        return [
            (f"{self.name}.wx", self.dwx),
            (f"{self.name}.wh", self.dwh),
            (f"{self.name}.b", self.db),
        ]


class RecurrentStack(Module):
    """Stacked LSTM layers sharing a (h, c) state list."""

    def __init__(
        self, in_dim: int, hidden: int = 512, layers: int = 2,
        rng: np.random.Generator | None = None, name: str = "rnn",
    ):
        rng = rng or np.random.default_rng(0)
        self.name = name
        self.hidden = hidden
        self.cells = [
            LSTMCell(in_dim if i == 0 else hidden, hidden, rng, name=f"{name}.cell{i}")
            for i in range(layers)
        ]

    def initial_state(self, batch: int) -> list[tuple[np.ndarray, np.ndarray]]:
        return [cell.initial_state(batch) for cell in self.cells]

    def step(self, x: np.ndarray, state: list, record: bool = False):
        new_state = []
        h = x
        for cell, st in zip(self.cells, state):
            h, st_new = cell.step(h, st, record=record)
            new_state.append(st_new)
        return h, new_state

    def forward_sequence(self, xs: list[np.ndarray], state: list | None = None):
        """Run a full sequence with recording; returns outputs and end state."""
        self.reset_cache()
        if state is None:
            state = self.initial_state(xs[0].shape[0])
        outs = []
        for x in xs:
            h, state = self.step(x, state, record=True)
            outs.append(h)
        return outs, state

    def backward_sequence(self, d_out_seq: list[np.ndarray]) -> list[np.ndarray]:
        grads = d_out_seq
        for cell in reversed(self.cells):
            grads = cell.backward_sequence(grads)
        return grads

    def reset_cache(self) -> None:
        for cell in self.cells:
            cell.reset_cache()

    def parameters(self):
        return [p for c in self.cells for p in c.parameters()]

    def gradients(self):
        return [g for c in self.cells for g in c.gradients()]
