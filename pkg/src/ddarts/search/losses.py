"""Architecture losses: zero-one regularizer, ablation loss, per-cell totals."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..autodiff.tensor import Tensor, as_tensor


@dataclass(frozen=True)
class LossConfig:
    """Weights of the zero-one term (``w01``) and the ablation term (``w_abl``)."""

    w01: float = 7.0
    w_abl: float = 0.5

    def __post_init__(self):
        if self.w01 < 0 or self.w_abl < 0:
            raise ValueError(f"loss weights must be >= 0, got w01={self.w01}, w_abl={self.w_abl}")


def _flat(alpha) -> Tensor:
    if isinstance(alpha, Tensor):
        return alpha.reshape(-1)
    if hasattr(alpha, "tables"):   # AlphaTable: every distinct logit once
        alpha = alpha.tables
    if isinstance(alpha, (list, tuple)):
        parts = [as_tensor(a).reshape(-1) for a in alpha]
        if len(parts) == 1:
            return parts[0]
        from ..autodiff.functional import concat
        return concat(parts, axis=0)
    return Tensor(np.ravel(alpha))


def zero_one_loss(alpha) -> Tensor:
    """``-mean((sigmoid(alpha) - 0.5)**2)`` over every logit.

    Accepts a Tensor, an array, a list of either, or an AlphaTable.
    """
    a = _flat(alpha)
    if a.shape[0] == 0:
        raise ValueError("zero-one loss of an empty table")
    return -((a.sigmoid() - 0.5) ** 2).mean()


def fair_loss(ce, alpha, cfg: LossConfig) -> Tensor:
    return as_tensor(ce) + cfg.w01 * zero_one_loss(alpha)


def ablation_loss(mc, i: int):
    """Relative deviation of cell ``i``'s marginal contribution from the mean.

    ``mc`` may be an array (returns a float) or a Tensor (returns a Tensor).
    Returns zero when the mean contribution is zero.
    """
    if isinstance(mc, Tensor):
        mean = mc.mean()
        if mean.item() == 0.0:
            return Tensor(0.0)
        return (mc[i] - mean) / mean
    mc = np.asarray(mc, dtype=np.float64)
    mean = mc.mean()
    if mean == 0.0:
        return 0.0
    return float((mc[i] - mean) / mean)


def ablation_losses(mc) -> np.ndarray:
    mc = np.asarray(mc, dtype=np.float64)
    return np.array([ablation_loss(mc, i) for i in range(mc.shape[0])])


def total_loss(ce, alpha_i, mc, i, cfg: LossConfig) -> Tensor:
    """``ce + w01 * L01(alpha_i) + w_abl * L_AB``.

    ``i`` is a cell index or a sequence of indices; for a sequence (cells
    sharing one table) the ablation term is the mean over its members.
    """
    out = fair_loss(ce, alpha_i, cfg)
    if cfg.w_abl == 0:
        return out
    members = [i] if np.ndim(i) == 0 else list(i)
    terms = [ablation_loss(mc, j) for j in members]
    lab = terms[0]
    for t in terms[1:]:
        lab = lab + t
    return out + cfg.w_abl * (lab * (1.0 / len(terms)) if len(terms) > 1 else lab)


def marginal_from_losses(full: float, ablated: Sequence[float]) -> np.ndarray:
    """``M_i = L_full - L_without_i``."""
    return float(full) - np.asarray(ablated, dtype=np.float64)
