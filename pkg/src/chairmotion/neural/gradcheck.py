"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .layers import Module


def finite_difference_check(
    loss_fn: Callable[[], float],
    model: Module,
    analytic_grads: np.ndarray,
    probes: int = 100,
    step: float = 1e-5,
    rng: np.random.Generator | None = None,
) -> float:
    """Max relative error between analytic and numeric gradient over random probes.

    loss_fn must recompute the scalar loss from the model's current
    parameters (no caching across calls). analytic_grads is the flat gradient
    aligned with model.param_vector().
    """
    rng = rng or np.random.default_rng(0)
    params = [p for _, p in model.parameters()]
    sizes = np.array([p.size for p in params])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])
    if analytic_grads.size != total:
        raise ValueError("gradient vector does not match parameter count")

    worst = 0.0
    for flat_idx in rng.choice(total, size=min(probes, total), replace=False):
        block = int(np.searchsorted(offsets, flat_idx, side="right") - 1)
        local = int(flat_idx - offsets[block])
        arr = params[block]
        orig = arr.flat[local]
        arr.flat[local] = orig + step
        up = loss_fn()
        arr.flat[local] = orig - step
        down = loss_fn()
        arr.flat[local] = orig
        numeric = (up - down) / (2.0 * step)
        analytic = analytic_grads[flat_idx]
        denom = max(abs(numeric), abs(analytic), 1e-3)
        worst = max(worst, abs(numeric - analytic) / denom)
    return worst
