"""Candidate operations, their benchmark scores, and search-space arithmetic."""
from __future__ import annotations

import enum
from math import prod

import numpy as np


class OpKind(str, enum.Enum):
    SKIP_CONNECT = "skip_connect"
    MAX_POOL_3X3 = "max_pool_3x3"
    AVG_POOL_3X3 = "avg_pool_3x3"
    SEP_CONV_3X3 = "sep_conv_3x3"
    SEP_CONV_5X5 = "sep_conv_5x5"
    DIL_CONV_3X3 = "dil_conv_3x3"
    DIL_CONV_5X5 = "dil_conv_5x5"
    CONV_3X1_1X3 = "conv_3x1_1x3"
    CONV_7X1_1X7 = "conv_7x1_1x7"
    SIMPLE_CONV_1X1 = "simple_conv_1x1"
    SIMPLE_CONV_3X3 = "simple_conv_3x3"
    BOTTLENECK_1X3X1 = "bottleneck_1x3x1"

    @property
    def index(self) -> int:
        return _ORDINAL[self]

    def __str__(self) -> str:
        return self.value


PRIMITIVES: tuple[OpKind, ...] = tuple(OpKind)
_ORDINAL = {op: i for i, op in enumerate(PRIMITIVES)}

# the original DARTS operations come first; the extended space appends five more
SEARCH_SPACES: dict[str, tuple[OpKind, ...]] = {
    "S": PRIMITIVES[:7],
    "So": PRIMITIVES,
}


def space_ops(search_space: str) -> tuple[OpKind, ...]:
    try:
        return SEARCH_SPACES[search_space]
    except KeyError:
        raise ValueError(f"unknown search space {search_space!r}; "
                         f"expected one of {sorted(SEARCH_SPACES)}") from None


# Top-1 accuracy (%) of the 3-cell proxy with only the given op enabled,
# median over edges.  Stored as fractions.
OP_SCORES: dict[OpKind, float] = {
    OpKind.CONV_3X1_1X3: 0.8276,
    OpKind.CONV_7X1_1X7: 0.8272,
    OpKind.MAX_POOL_3X3: 0.8296,
    OpKind.AVG_POOL_3X3: 0.8251,
    OpKind.SKIP_CONNECT: 0.8215,
    OpKind.SIMPLE_CONV_1X1: 0.8227,
    OpKind.SIMPLE_CONV_3X3: 0.8312,
    OpKind.SEP_CONV_3X3: 0.8319,
    OpKind.SEP_CONV_5X5: 0.8487,
    OpKind.DIL_CONV_3X3: 0.8296,
    OpKind.DIL_CONV_5X5: 0.8299,
    OpKind.BOTTLENECK_1X3X1: 0.8306,
}


def validate_scores(scores: dict) -> dict[OpKind, float]:
    """Check that ``scores`` is a complete score table and return it keyed by OpKind."""
    table = {OpKind(k): float(v) for k, v in scores.items()}
    missing = set(PRIMITIVES) - set(table)
    if missing:
        raise ValueError(f"score table lacks {sorted(m.value for m in missing)}")
    bad = {k.value: v for k, v in table.items() if not 0.0 < v < 1.0}
    if bad:
        raise ValueError(f"scores must lie strictly inside (0, 1): {bad}")
    return table


def hamming_weights(search_space: str = "So", scores: dict | None = None) -> np.ndarray:
    """Per-position weight vector for edge comparisons in ``search_space``."""
    table = validate_scores(OP_SCORES if scores is None else scores)
    return np.array([table[op] for op in space_ops(search_space)])


def search_space_size(k: int, n: int) -> int:
    """Number of distinct cells with ``k`` candidate ops and ``n`` intermediate nodes.

    Node ``i`` picks two of its ``i + 1`` predecessors and one op for each of
    the two edges, giving ``prod_i (i+1) i / 2 * k**2``.  Exact integer.
    """
    if k < 1 or n < 1:
        raise ValueError(f"need k >= 1 and n >= 1, got k={k}, n={n}")
    return prod((i + 1) * i // 2 * k * k for i in range(1, n + 1))


def total_space_size(k: int, n: int, cells: int) -> int:
    if cells < 1:
        raise ValueError(f"need at least one cell, got {cells}")
    return search_space_size(k, n) ** cells
