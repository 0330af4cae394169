"""First-order optimizers over lists of Tensors."""
from __future__ import annotations

import math

import numpy as np

from ..autodiff.tensor import Tensor


class Adam:
    def __init__(self, params: list[Tensor], lr: float = 3e-4, betas=(0.5, 0.999),
                 eps: float = 1e-8, weight_decay: float = 0.0):
        self.params = list(params)
        self.lr, self.betas, self.eps, self.weight_decay = lr, betas, eps, weight_decay
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self, grads=None) -> None:
        grads = [p.grad for p in self.params] if grads is None else grads
        self.t += 1
        b1, b2 = self.betas
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            if g is None:
                continue
            if self.weight_decay:
                g = g + self.weight_decay * p.data
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            mhat = m / (1 - b1 ** self.t)
            vhat = v / (1 - b2 ** self.t)
            p.data -= self.lr * mhat / (np.sqrt(vhat) + self.eps)

    def state(self) -> list[np.ndarray]:
        return [np.array(self.t, dtype=np.float64), *self.m, *self.v]


class SGD:
    """Momentum SGD with coupled weight decay."""

    def __init__(self, params: list[Tensor], lr: float = 0.025, momentum: float = 0.9,
                 weight_decay: float = 3e-4):
        self.params = list(params)
        self.lr, self.momentum, self.weight_decay = lr, momentum, weight_decay
        self.buf = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        for p, b in zip(self.params, self.buf):
            if p.grad is None:
                continue
            g = p.grad + self.weight_decay * p.data
            b *= self.momentum
            b += g
            p.data -= self.lr * b

    def state(self) -> list[np.ndarray]:
        return list(self.buf)


def clip_grad_norm(params: list[Tensor], max_norm: float) -> float:
    """Scale gradients in place so their global L2 norm is at most ``max_norm``."""
    grads = [p.grad for p in params if p.grad is not None]
    total = math.sqrt(sum(float((g * g).sum()) for g in grads))
    if total > max_norm:
        scale = max_norm / (total + 1e-6)
        for p in params:
            if p.grad is not None:
                p.grad = p.grad * scale
    return total


def cosine_lr(base: float, epoch: int, total: int, lr_min: float = 0.0) -> float:
    if total <= 1:
        return base
    return lr_min + 0.5 * (base - lr_min) * (1 + math.cos(math.pi * epoch / total))
