"""Small module system: parameter discovery, normalization mode, layers."""
from __future__ import annotations

from typing import Iterator

import numpy as np

from . import functional as F
from .tensor import Tensor


def parameter(data) -> Tensor:
    return Tensor(data, requires_grad=True)


def he_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Module:
    """Base class; parameters are the ``requires_grad`` tensors among attributes."""

    def children(self) -> Iterator["Module"]:
        for v in vars(self).values():
            if isinstance(v, Module):
                yield v
            elif isinstance(v, (list, tuple)):
                for item in v:
                    if isinstance(item, Module):
                        yield item
                    elif isinstance(item, (list, tuple)):
                        yield from (m for m in item if isinstance(m, Module))

    def modules(self) -> Iterator["Module"]:
        yield self
        for child in self.children():
            yield from child.modules()

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for k, v in vars(self).items():
            if isinstance(v, Tensor) and v.requires_grad:
                yield prefix + k, v
        for i, child in enumerate(self.children()):
            yield from child.named_parameters(f"{prefix}{type(child).__name__}{i}.")

    def parameters(self) -> list[Tensor]:
        seen, out = set(), []
        for m in self.modules():
            for v in vars(m).values():
                if isinstance(v, Tensor) and v.requires_grad and id(v) not in seen:
                    seen.add(id(v))
                    out.append(v)
        return out

    def buffers(self) -> list[np.ndarray]:
        out = []
        for m in self.modules():
            if isinstance(m, ChannelNorm):
                out.extend([m.running_mean, m.running_var])
        return out

    def set_norm_mode(self, mode: str) -> None:
        for m in self.modules():
            if isinstance(m, ChannelNorm):
                m.mode = mode

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


class ChannelNorm(Module):
    def __init__(self, channels: int):
        self.gamma = parameter(np.ones(channels))
        self.beta = parameter(np.zeros(channels))
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.mode = "train"

    def forward(self, x: Tensor) -> Tensor:
        return F.channel_norm(x, self.gamma, self.beta, self.running_mean,
                              self.running_var, self.mode)


class Conv2d(Module):
    def __init__(self, rng, c_in: int, c_out: int, kernel, stride: int = 1,
                 padding=0, dilation: int = 1, depthwise: bool = False):
        kh, kw = (kernel, kernel) if isinstance(kernel, int) else kernel
        self.stride, self.padding, self.dilation = stride, padding, dilation
        if depthwise:
            if c_in != c_out:
                raise ValueError("depthwise convolution keeps the channel count")
            self.groups = c_in
            self.weight = parameter(he_uniform(rng, (c_out, 1, kh, kw), kh * kw))
        else:
            self.groups = 1
            self.weight = parameter(he_uniform(rng, (c_out, c_in, kh, kw), c_in * kh * kw))

    def forward(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, self.stride, self.padding, self.dilation, self.groups)


class Linear(Module):
    def __init__(self, rng, n_in: int, n_out: int, zero: bool = False):
        w = np.zeros((n_out, n_in)) if zero else he_uniform(rng, (n_out, n_in), n_in)
        self.weight = parameter(w)
        self.bias = parameter(np.zeros(n_out))

    def forward(self, x: Tensor) -> Tensor:
        return F.linear(x, self.weight, self.bias)
