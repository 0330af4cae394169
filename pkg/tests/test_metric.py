import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_cell, random_genotype
from ddarts.genotype import CellSpec, Genotype
from ddarts.handcrafted import encode_handcrafted
from ddarts.metric import (DistanceTrace, distance_statistics, hamming, hausdorff_cell,
                           matrix_to_csv, metric_M, pairwise_matrix, plateau_stop)
from ddarts.ops import OP_SCORES, OpKind, PRIMITIVES, hamming_weights

W12 = np.array([OP_SCORES[o] for o in PRIMITIVES])


def ham_loop(u, v, w):
    total = 0.0
    for a, b, x in zip(u, v, w):
        if a != b:
            total += x
    return total / len(w)


def hausdorff_loop(X, Y, w):
    def d(A, B):
        return max(min(ham_loop(a, b, w) for b in B) for a in A)
    return max(d(X, Y), d(Y, X))


def onehot(i, k=12):
    v = np.zeros(k, int)
    v[i] = 1
    return v


def test_hamming_examples():
    u = onehot(OpKind.CONV_3X1_1X3.index)
    v = onehot(OpKind.CONV_7X1_1X7.index)
    assert abs(hamming(u, v, W12) - (0.8276 + 0.8272) / 12) < 1e-9
    assert hamming(u, u, W12) == 0
    assert hamming(np.ones(12), np.zeros(12), W12) == pytest.approx(W12.mean(), abs=1e-15)
    with pytest.raises(ValueError):
        hamming(np.ones(3), np.ones(4))
    with pytest.raises(ValueError):
        hamming(np.ones(3), np.ones(3), W12)


@given(st.integers(0, 2**32 - 1))
def test_hamming_oracle_and_bound(seed):
    rng = np.random.default_rng(seed)
    u, v = rng.integers(0, 2, 12), rng.integers(0, 2, 12)
    assert hamming(u, v, W12) == pytest.approx(ham_loop(u, v, W12), abs=1e-15)
    assert hamming(u, v, W12) <= W12.mean() + 1e-15


def test_hausdorff_against_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(200):
        X, Y = random_cell(rng), random_cell(rng)
        ref = hausdorff_loop(X.matrix(12), Y.matrix(12), W12)
        assert abs(hausdorff_cell(X, Y, W12) - ref) <= 1e-12


def test_hausdorff_asymmetric_case():
    # X's edges are a subset of Y's vectors: d(X,Y) = 0 while d(Y,X) > 0
    X = CellSpec.from_ops({})
    Y = CellSpec.from_ops({(0, 2): ["sep_conv_5x5"]})
    from ddarts.metric import directed_hausdorff
    assert directed_hausdorff(X, Y, W12) > 0 or directed_hausdorff(Y, X, W12) > 0
    dxy, dyx = directed_hausdorff(X, Y, W12), directed_hausdorff(Y, X, W12)
    assert dxy != dyx
    assert hausdorff_cell(X, Y, W12) == max(dxy, dyx) == pytest.approx(0.8487 / 12)


def test_hausdorff_is_blind_to_edge_placement():
    # same multiset of edge vectors on different edges: zero distance
    X = CellSpec.from_ops({(0, 2): ["skip_connect"], (1, 2): ["sep_conv_3x3"]})
    Y = CellSpec.from_ops({(0, 2): ["sep_conv_3x3"], (1, 2): ["skip_connect"]})
    assert X != Y and hausdorff_cell(X, Y, W12) == 0.0


def test_metric_axioms_random_triples():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        A, B, C = (random_genotype(rng, 3) for _ in range(3))
        ab, ba = metric_M(A, B), metric_M(B, A)
        assert ab == ba
        assert metric_M(A, A) == 0.0
        assert (ab == 0) == (A.cells == B.cells)
        assert ab <= metric_M(A, C) + metric_M(C, B) + 1e-12


def test_metric_errors_and_bounds():
    rng = np.random.default_rng(1)
    A, B = random_genotype(rng, 3), random_genotype(rng, 4)
    with pytest.raises(ValueError):
        metric_M(A, B)
    with pytest.raises(ValueError):
        pairwise_matrix([A, B])
    C = random_genotype(rng, 3)
    assert metric_M(A, C) <= W12.mean()


def test_pairwise_matrix():
    r18, r50 = encode_handcrafted("resnet18"), encode_handcrafted("resnet50")
    assert pairwise_matrix([r18]).tolist() == [[0.0]]
    D = pairwise_matrix([r18, r18, r50])
    assert np.array_equal(D[0], D[1]) and np.array_equal(D, D.T) and np.all(np.diag(D) == 0)
    rng = np.random.default_rng(5)
    rand = [random_genotype(rng, 4) for _ in range(10)]
    rand_mean = np.mean([metric_M(a, b) for a, b in itertools.combinations(rand, 2)])
    assert 0 < D[0, 2] < rand_mean
    csv_text = matrix_to_csv(D, ["a", "b", "c"])
    assert csv_text.splitlines()[0] == ",a,b,c" and len(csv_text.splitlines()) == 4
    stats = distance_statistics(D)
    assert stats["pairs"] == 3 and stats["min"] == 0.0


def test_plateau_examples():
    trace = [0.5, 0.4, 0.3, 0.2, 0.15, 0.12, 0.1, 0.09, 0.085, 0.0845] + [0.084] * 10
    assert plateau_stop(trace) == (True, 14)
    assert plateau_stop([0.0] * 20) == (True, 14)
    assert plateau_stop(list(np.arange(30) * 0.01)) == (False, None)
    assert plateau_stop(list(np.arange(30) * 0.01), tolerance=np.inf) == (True, 14)
    assert plateau_stop([0.0] * 14) == (False, None)
    with pytest.raises(ValueError):
        plateau_stop([0.0], window=0)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=40), st.floats(0, 0.5), st.floats(0, 0.5),
       st.integers(1, 8), st.integers(0, 15))
def test_plateau_monotone_in_tolerance(vals, t1, t2, w, start):
    lo, hi = sorted((t1, t2))
    s_lo, e_lo = plateau_stop(vals, w, start, lo)
    s_hi, e_hi = plateau_stop(vals, w, start, hi)
    if s_lo:
        assert s_hi and e_hi <= e_lo


def test_trace_invariants():
    t = DistanceTrace()
    t.append(0, 0.1)
    with pytest.raises(ValueError):
        t.append(0, 0.1)
    with pytest.raises(ValueError):
        t.append(1, -0.1)
    assert t.to_csv() == "epoch,distance_du\n0,0.1\n"
