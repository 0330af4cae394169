"""Central finite-difference oracle for reverse-mode gradients."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor, no_grad


def numeric_grad(f: Callable[[], Tensor], x: Tensor, eps: float = 1e-6) -> np.ndarray:
    """d f() / d x by central differences, perturbing ``x.data`` in place."""
    g = np.zeros_like(x.data)
    flat = x.data.reshape(-1)
    gflat = g.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = float(f().data)
            flat[i] = orig - eps
            down = float(f().data)
            flat[i] = orig
            gflat[i] = (up - down) / (2 * eps)
    return g


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """max |a - n| divided by the largest gradient magnitude of either array."""
    if analytic.size == 0:
        return 0.0
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), floor)
    return float(np.abs(analytic - numeric).max() / scale)


def check_gradients(f: Callable[[], Tensor], inputs: Sequence[Tensor],
                    eps: float = 1e-6) -> float:
    """Worst relative error between backward() and finite differences over ``inputs``."""
    for t in inputs:
        t.grad = None
    f().backward()
    worst = 0.0
    for t in inputs:
        analytic = np.zeros_like(t.data) if t.grad is None else t.grad.copy()
        worst = max(worst, max_rel_error(analytic, numeric_grad(f, t, eps)))
    return worst
