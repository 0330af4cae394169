"""Minimal dense-tensor engine with reverse-mode differentiation."""
from .tensor import Tensor, no_grad, grad_enabled, sigmoid, softmax
from .primitives import PrimitiveOp, mixed_edge, mixed_edge_softmax
from . import functional

__all__ = ["Tensor", "no_grad", "grad_enabled", "sigmoid", "softmax", "PrimitiveOp",
           "mixed_edge", "mixed_edge_softmax", "functional"]
