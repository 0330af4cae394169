"""
A small reverse-mode engine
===========================

Everything in the search runs on a numpy tensor type with reverse-mode
gradients.  Here we build a mixed edge by hand and check its gradient.
"""
import numpy as np

from ddarts.autodiff import PrimitiveOp, Tensor, mixed_edge, mixed_edge_softmax
from ddarts.autodiff.gradcheck import check_gradients
from ddarts.ops import OpKind

rng = np.random.default_rng(0)

# three candidate ops on one edge, 2 channels in and out
ops = [PrimitiveOp(k, 2, 1, rng) for k in (OpKind.SKIP_CONNECT, OpKind.SEP_CONV_3X3,
                                           OpKind.MAX_POOL_3X3)]
x = Tensor(rng.standard_normal((4, 2, 6, 6)), requires_grad=True)
alpha = Tensor(np.array([0.5, -1.0, 2.0]), requires_grad=True)

# sigmoid mixing: each op is gated independently
y = mixed_edge(x, ops, alpha)
loss = (y * y).mean()
loss.backward()
print("loss", loss.item())
print("d loss / d alpha", alpha.grad)

# softmax mixing couples the gates; adding a constant to alpha changes nothing
a = mixed_edge_softmax(x, ops, np.array([0.5, -1.0, 2.0])).data
b = mixed_edge_softmax(x, ops, np.array([10.5, 9.0, 12.0])).data
print("softmax shift invariant:", np.allclose(a, b))

# finite differences agree with backward()
err = check_gradients(lambda: (mixed_edge(x, ops, alpha) ** 2).mean(), [x, alpha])
print("worst relative gradient error", err)
