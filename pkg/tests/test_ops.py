from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ddarts.ops import (OP_SCORES, PRIMITIVES, OpKind, hamming_weights, search_space_size,
                        space_ops, total_space_size, validate_scores)


def brute_cell_count(k, n):
    # each node i (1-based) picks an unordered pair of its i+1 predecessors and one op per edge
    total = 1
    for i in range(1, n + 1):
        total *= comb(i + 1, 2) * k * k
    return total


def test_ordering_and_spaces():
    names = [o.value for o in PRIMITIVES]
    assert names == ["skip_connect", "max_pool_3x3", "avg_pool_3x3", "sep_conv_3x3",
                     "sep_conv_5x5", "dil_conv_3x3", "dil_conv_5x5", "conv_3x1_1x3",
                     "conv_7x1_1x7", "simple_conv_1x1", "simple_conv_3x3", "bottleneck_1x3x1"]
    assert [o.index for o in PRIMITIVES] == list(range(12))
    assert space_ops("S") == PRIMITIVES[:7]
    assert space_ops("So") == PRIMITIVES
    with pytest.raises(ValueError):
        space_ops("X")


def test_score_table():
    assert set(OP_SCORES) == set(OpKind)
    assert all(0 < v < 1 for v in OP_SCORES.values())
    w = hamming_weights("So")
    assert w[OpKind.SEP_CONV_5X5.index] == 0.8487
    assert hamming_weights("S").shape == (7,)
    with pytest.raises(ValueError):
        validate_scores({"skip_connect": 0.5})
    bad = {k: 0.5 for k in OpKind}
    bad[OpKind.SKIP_CONNECT] = 1.0
    with pytest.raises(ValueError):
        validate_scores(bad)


def test_space_size_values():
    assert search_space_size(1, 1) == 1
    assert search_space_size(7, 4) == 1_037_664_180
    assert search_space_size(12, 4) == 77_396_705_280
    assert total_space_size(7, 4, 1) == search_space_size(7, 4)
    assert len(str(total_space_size(7, 4, 2))) - 1 == 18
    assert len(str(total_space_size(7, 4, 8))) - 1 == 72
    for bad in [(0, 4), (7, 0)]:
        with pytest.raises(ValueError):
            search_space_size(*bad)
    with pytest.raises(ValueError):
        total_space_size(7, 4, 0)


@given(st.integers(1, 30), st.integers(1, 12))
def test_space_size_matches_brute_and_telescopes(k, n):
    assert search_space_size(k, n) == brute_cell_count(k, n)
    ratio = Fraction(search_space_size(k, n + 1), search_space_size(k, n))
    assert ratio == Fraction((n + 2) * (n + 1), 2) * k * k
