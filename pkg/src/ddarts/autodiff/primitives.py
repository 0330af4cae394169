"""Forward/backward implementations of the twelve candidate operations.

Each convolutional unit is conv -> channel norm -> ReLU.  Every op maps
(B, C, H, W) to (B, C, H/stride, W/stride).
"""
from __future__ import annotations

import numpy as np

from ..ops import OpKind
from . import functional as F
from .nn import ChannelNorm, Conv2d, Module
from .tensor import Tensor


class ConvUnit(Module):
    """A chain of convolutions closed by one normalization and a ReLU."""

    def __init__(self, convs: list[Conv2d], channels: int):
        self.convs = convs
        self.norm = ChannelNorm(channels)

    def forward(self, x: Tensor) -> Tensor:
        for conv in self.convs:
            x = conv(x)
        return self.norm(x).relu()


class Sequential(Module):
    def __init__(self, layers: list[Module]):
        self.layers = layers

    def forward(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            x = layer(x)
        return x


class Identity(Module):
    def forward(self, x: Tensor) -> Tensor:
        return x


class FactorizedReduce(Module):
    """Halve the resolution with two offset 1x1 stride-2 convs, channel-split."""

    def __init__(self, rng, c_in: int, c_out: int):
        half = c_out // 2
        self.conv_a = Conv2d(rng, c_in, half, 1, stride=2)
        self.conv_b = Conv2d(rng, c_in, c_out - half, 1, stride=2)
        self.norm = ChannelNorm(c_out)

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[2] % 2 or x.shape[3] % 2:
            raise ValueError(f"factorized reduction needs even spatial size, got {x.shape[2:]}")
        out = F.concat([self.conv_a(x), self.conv_b(x[:, :, 1:, 1:])], axis=1)
        return self.norm(out).relu()


class Pool(Module):
    def __init__(self, kind: str, stride: int):
        self.kind, self.stride = kind, stride

    def forward(self, x: Tensor) -> Tensor:
        pool = F.max_pool2d if self.kind == "max" else F.avg_pool2d
        return pool(x, 3, self.stride, 1)


def _sep(rng, c, k, stride):
    p = k // 2
    return [
        ConvUnit([Conv2d(rng, c, c, k, stride, p, depthwise=True), Conv2d(rng, c, c, 1)], c),
        ConvUnit([Conv2d(rng, c, c, k, 1, p, depthwise=True), Conv2d(rng, c, c, 1)], c),
    ]


def _dil(rng, c, k, stride):
    p = k - 1   # dilation 2
    return [ConvUnit([Conv2d(rng, c, c, k, stride, p, dilation=2, depthwise=True),
                      Conv2d(rng, c, c, 1)], c)]


def _factorized(rng, c, k, stride):
    p = k // 2
    return [ConvUnit([Conv2d(rng, c, c, (1, k), stride, (0, p)),
                      Conv2d(rng, c, c, (k, 1), 1, (p, 0))], c)]


def _bottleneck(rng, c, stride):
    mid = max(2, c // 4)   # a single channel makes the inner norm scale-degenerate
    return [
        ConvUnit([Conv2d(rng, c, mid, 1, stride)], mid),
        ConvUnit([Conv2d(rng, mid, mid, 3, 1, 1)], mid),
        ConvUnit([Conv2d(rng, mid, c, 1)], c),
    ]


class PrimitiveOp(Module):
    """One candidate operation on an edge, with its own parameters."""

    def __init__(self, kind: OpKind | str, channels: int, stride: int = 1,
                 rng: np.random.Generator | None = None):
        kind = OpKind(kind)
        if stride not in (1, 2):
            raise ValueError(f"stride must be 1 or 2, got {stride}")
        rng = np.random.default_rng(0) if rng is None else rng
        c = channels
        self.kind, self.channels, self.stride = kind, c, stride
        if kind is OpKind.SKIP_CONNECT:
            body = Identity() if stride == 1 else FactorizedReduce(rng, c, c)
        elif kind is OpKind.MAX_POOL_3X3:
            body = Pool("max", stride)
        elif kind is OpKind.AVG_POOL_3X3:
            body = Pool("avg", stride)
        elif kind is OpKind.SEP_CONV_3X3:
            body = Sequential(_sep(rng, c, 3, stride))
        elif kind is OpKind.SEP_CONV_5X5:
            body = Sequential(_sep(rng, c, 5, stride))
        elif kind is OpKind.DIL_CONV_3X3:
            body = Sequential(_dil(rng, c, 3, stride))
        elif kind is OpKind.DIL_CONV_5X5:
            body = Sequential(_dil(rng, c, 5, stride))
        elif kind is OpKind.CONV_3X1_1X3:
            body = Sequential(_factorized(rng, c, 3, stride))
        elif kind is OpKind.CONV_7X1_1X7:
            body = Sequential(_factorized(rng, c, 7, stride))
        elif kind is OpKind.SIMPLE_CONV_1X1:
            body = Sequential([ConvUnit([Conv2d(rng, c, c, 1, stride)], c)])
        elif kind is OpKind.SIMPLE_CONV_3X3:
            body = Sequential([ConvUnit([Conv2d(rng, c, c, 3, stride, 1)], c)])
        elif kind is OpKind.BOTTLENECK_1X3X1:
            body = Sequential(_bottleneck(rng, c, stride))
        else:  # pragma: no cover - enum is closed
            raise ValueError(f"unconfigured op {kind}")
        self.body = body

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4 or x.shape[1] != self.channels:
            raise ValueError(f"{self.kind.value} expects (B, {self.channels}, H, W), "
                             f"got {x.shape}")
        return self.body(x)

    def __repr__(self) -> str:
        return f"PrimitiveOp({self.kind.value}, C={self.channels}, stride={self.stride})"


def _mixed(x, ops, alpha, mix):
    alpha = alpha if isinstance(alpha, Tensor) else Tensor(alpha)
    if alpha.shape != (len(ops),):
        raise ValueError(f"{alpha.shape} logits for {len(ops)} operations")
    return mix([op(x) for op in ops], alpha)


def mixed_edge(x: Tensor, ops, alpha) -> Tensor:
    """``sum_k sigmoid(alpha_k) * ops[k](x)``."""
    return _mixed(x, ops, alpha, F.sigmoid_mix)


def mixed_edge_softmax(x: Tensor, ops, alpha) -> Tensor:
    """``sum_k softmax(alpha)_k * ops[k](x)``."""
    return _mixed(x, ops, alpha, F.softmax_mix)
