"""Differentiable array kernels: convolutions, pooling, normalization, losses.

Feature maps are laid out as (batch, channels, height, width).  Convolutions
gather every kernel tap into a column tensor of shape (B, C, kh*kw, Ho, Wo)
and contract it with BLAS; the backward pass scatters the column gradient
back tap by tap.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .tensor import Tensor, as_tensor


def _pair(v) -> tuple[int, int]:
    return (v, v) if isinstance(v, int) else tuple(v)


def _out_size(n: int, k: int, s: int, p: int, d: int) -> int:
    return (n + 2 * p - d * (k - 1) - 1) // s + 1


def _taps(kh, kw, s, d, ho, wo):
    for i in range(kh):
        for j in range(kw):
            yield (slice(i * d, i * d + s * (ho - 1) + 1, s),
                   slice(j * d, j * d + s * (wo - 1) + 1, s))


def _im2col(xp: np.ndarray, kh, kw, s, d, ho, wo) -> np.ndarray:
    b, c, _, _ = xp.shape
    sb, sc, sh, sw = xp.strides
    view = as_strided(xp, (b, c, kh, kw, ho, wo), (sb, sc, sh * d, sw * d, sh * s, sw * s),
                      writeable=False)
    return view.reshape(b, c, kh * kw, ho, wo)


def _pad(x: np.ndarray, ph: int, pw: int, value: float = 0.0) -> np.ndarray:
    if ph == 0 and pw == 0:
        return x
    b, c, h, w = x.shape
    out = np.full((b, c, h + 2 * ph, w + 2 * pw), value)
    out[:, :, ph:ph + h, pw:pw + w] = x
    return out


def _col2im(gcols: np.ndarray, padded_shape, kh, kw, s, d, ho, wo) -> np.ndarray:
    gxp = np.zeros(padded_shape)
    for k, (hs, ws) in enumerate(_taps(kh, kw, s, d, ho, wo)):
        gxp[:, :, hs, ws] += gcols[:, :, k]
    return gxp


def _unpad(a: np.ndarray, ph: int, pw: int) -> np.ndarray:
    h, w = a.shape[2], a.shape[3]
    return a[:, :, ph:h - ph, pw:w - pw]


def conv2d(x: Tensor, weight: Tensor, stride: int = 1, padding=0, dilation: int = 1,
           groups: int = 1) -> Tensor:
    """2-D cross-correlation without bias.

    ``groups`` must be 1 (dense) or equal to the input channel count
    (depthwise, one filter per channel).
    """
    b, c, h, w = x.shape
    cout, cin_g, kh, kw = weight.shape
    ph, pw = _pair(padding)
    if groups == 1:
        if cin_g != c:
            raise ValueError(f"weight expects {cin_g} input channels, got {c}")
    elif groups == c:
        if cin_g != 1 or cout != c:
            raise ValueError("depthwise weight must have shape (C, 1, kh, kw)")
    else:
        raise ValueError(f"groups must be 1 or {c}, got {groups}")
    ho = _out_size(h, kh, stride, ph, dilation)
    wo = _out_size(w, kw, stride, pw, dilation)
    if ho < 1 or wo < 1:
        raise ValueError(f"input {h}x{w} too small for kernel {kh}x{kw}")
    xp = _pad(x.data, ph, pw)
    kk = kh * kw
    wd = weight.data
    need_w, need_x = weight.requires_grad, x.requires_grad

    if groups == 1:
        cols = _im2col(xp, kh, kw, stride, dilation, ho, wo)   # (B, C, KK, Ho, Wo)
        w2 = wd.reshape(cout, c * kk)
        flat = cols.reshape(b, c * kk, ho * wo)
        out = np.matmul(w2, flat).reshape(b, cout, ho, wo)

        def back(g):
            gf = g.reshape(b, cout, ho * wo)
            gw = gx = None
            if need_w:
                gw = np.einsum("bop,bkp->ok", gf, flat).reshape(wd.shape)
            if need_x:
                gcols = np.matmul(w2.T, gf).reshape(cols.shape)
                gx = _unpad(_col2im(gcols, xp.shape, kh, kw, stride, dilation, ho, wo), ph, pw)
            return gx, gw
    else:
        # depthwise: accumulate tap by tap instead of materializing the columns
        wk = wd.reshape(c, kk)[None, :, :, None, None]
        taps = list(_taps(kh, kw, stride, dilation, ho, wo))
        out = np.zeros((b, c, ho, wo))
        for k, (hs, ws) in enumerate(taps):
            out += wk[:, :, k] * xp[:, :, hs, ws]

        def back(g):
            gw = gx = None
            if need_w:
                gw = np.stack([np.einsum("bchw,bchw->c", g, xp[:, :, hs, ws])
                               for hs, ws in taps], axis=1).reshape(wd.shape)
            if need_x:
                gxp = np.zeros(xp.shape)
                for k, (hs, ws) in enumerate(taps):
                    gxp[:, :, hs, ws] += wk[:, :, k] * g
                gx = _unpad(gxp, ph, pw)
            return gx, gw

    return Tensor._make(out, (x, weight), back)


def max_pool2d(x: Tensor, kernel: int = 3, stride: int = 1, padding: int = 1) -> Tensor:
    b, c, h, w = x.shape
    ho = _out_size(h, kernel, stride, padding, 1)
    wo = _out_size(w, kernel, stride, padding, 1)
    xp = _pad(x.data, padding, padding, -np.inf)
    cols = _im2col(xp, kernel, kernel, stride, 1, ho, wo)
    arg = cols.argmax(axis=2)[:, :, None]
    out = np.take_along_axis(cols, arg, axis=2)[:, :, 0]

    def back(g):
        gcols = np.zeros(cols.shape)
        np.put_along_axis(gcols, arg, g[:, :, None], axis=2)
        gx = _col2im(gcols, xp.shape, kernel, kernel, stride, 1, ho, wo)
        return (_unpad(gx, padding, padding),)

    return Tensor._make(out, (x,), back)


def avg_pool2d(x: Tensor, kernel: int = 3, stride: int = 1, padding: int = 1) -> Tensor:
    """Average pooling whose divisor counts only in-bounds elements."""
    b, c, h, w = x.shape
    ho = _out_size(h, kernel, stride, padding, 1)
    wo = _out_size(w, kernel, stride, padding, 1)
    xp = _pad(x.data, padding, padding)
    ones = _pad(np.ones((1, 1, h, w)), padding, padding)
    count = _im2col(ones, kernel, kernel, stride, 1, ho, wo).sum(axis=2)
    out = _im2col(xp, kernel, kernel, stride, 1, ho, wo).sum(axis=2) / count

    def back(g):
        gcols = np.broadcast_to((g / count)[:, :, None], (b, c, kernel * kernel, ho, wo))
        gx = _col2im(gcols, xp.shape, kernel, kernel, stride, 1, ho, wo)
        return (_unpad(gx, padding, padding),)

    return Tensor._make(out, (x,), back)


def channel_norm(x: Tensor, gamma: Tensor, beta: Tensor, running_mean: np.ndarray,
                 running_var: np.ndarray, mode: str = "train", momentum: float = 0.1,
                 eps: float = 1e-5) -> Tensor:
    """Per-channel normalization followed by an affine map.

    ``mode`` selects the statistics: ``"train"`` uses the batch and updates the
    running buffers in place, ``"frozen"`` uses the batch but leaves the
    buffers alone, ``"eval"`` uses the running buffers.
    """
    shape = (1, -1, 1, 1)
    gd = gamma.data.reshape(shape)
    if mode == "eval":
        inv = 1.0 / np.sqrt(running_var + eps).reshape(shape)
        xhat = (x.data - running_mean.reshape(shape)) * inv
        out = gd * xhat + beta.data.reshape(shape)

        def back(g):
            return (g * gd * inv, (g * xhat).sum(axis=(0, 2, 3)), g.sum(axis=(0, 2, 3)))

        return Tensor._make(out, (x, gamma, beta), back)

    if mode not in ("train", "frozen"):
        raise ValueError(f"unknown normalization mode {mode!r}")
    mu = x.data.mean(axis=(0, 2, 3), keepdims=True)
    var = x.data.var(axis=(0, 2, 3), keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = gd * xhat + beta.data.reshape(shape)
    if mode == "train":
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu.ravel()
        running_var *= 1.0 - momentum
        running_var += momentum * var.ravel()

    def back(g):
        dxhat = g * gd
        n = x.data.size // x.shape[1]
        s1 = dxhat.sum(axis=(0, 2, 3), keepdims=True)
        s2 = (dxhat * xhat).sum(axis=(0, 2, 3), keepdims=True)
        gx = inv / n * (n * dxhat - s1 - xhat * s2)
        return gx, (g * xhat).sum(axis=(0, 2, 3)), g.sum(axis=(0, 2, 3))

    return Tensor._make(out, (x, gamma, beta), back)


def concat(tensors: Sequence[Tensor], axis: int = 1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def back(g):
        return tuple(np.split(g, sizes, axis=axis))

    return Tensor._make(np.concatenate([t.data for t in tensors], axis=axis),
                        tuple(tensors), back)


def weighted_sum(weights: Tensor, terms: Sequence[Tensor]) -> Tensor:
    """Return sum_k weights[k] * terms[k] for a 1-D weight vector."""
    if weights.shape != (len(terms),):
        raise ValueError(f"{weights.shape[0] if weights.ndim else 0} weights "
                         f"for {len(terms)} terms")
    wd = weights.data
    out = sum(wk * t.data for wk, t in zip(wd, terms))

    def back(g):
        gw = np.array([(g * t.data).sum() for t in terms])
        return (gw, *(wk * g for wk in wd))

    return Tensor._make(out, (weights, *terms), back)


def add_n(terms: Sequence[Tensor]) -> Tensor:
    out = terms[0].data.copy()
    for t in terms[1:]:
        out += t.data
    return Tensor._make(out, tuple(terms), lambda g: (g,) * len(terms))


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    xd, wd = x.data, weight.data
    out = xd @ wd.T
    if bias is None:
        return Tensor._make(out, (x, weight), lambda g: (g @ wd, g.T @ xd))
    out = out + bias.data
    return Tensor._make(out, (x, weight, bias),
                        lambda g: (g @ wd, g.T @ xd, g.sum(axis=0)))


def global_avg_pool(x: Tensor) -> Tensor:
    return x.mean(axis=(2, 3))


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def cross_entropy(logits: Tensor, targets) -> Tensor:
    """Batch mean of -log softmax(logits)[target]."""
    t = np.asarray(targets, dtype=np.int64)
    b, k = logits.shape
    if t.shape != (b,):
        raise ValueError(f"expected {b} targets, got shape {t.shape}")
    if t.size and (t.min() < 0 or t.max() >= k):
        raise ValueError(f"target out of range [0, {k})")
    lsm = log_softmax(logits.data)
    rows = np.arange(b)
    loss = -lsm[rows, t].mean()

    def back(g):
        p = np.exp(lsm)
        p[rows, t] -= 1.0
        return (g * p / b,)

    return Tensor._make(np.asarray(loss), (logits,), back)


def sigmoid_mix(x_terms: Sequence[Tensor], alpha: Tensor) -> Tensor:
    return weighted_sum(alpha.sigmoid(), x_terms)


def softmax_mix(x_terms: Sequence[Tensor], alpha: Tensor) -> Tensor:
    return weighted_sum(alpha.softmax(axis=-1), x_terms)
