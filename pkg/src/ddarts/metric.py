"""Distance between architectures in distance units (DU).

Edges are compared with an operation-weighted Hamming distance, cells with
the symmetric Hausdorff distance between their sets of edge vectors, and
genotypes with the mean cell distance over positions.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .genotype import CellSpec, Genotype
from .ops import hamming_weights


def _weights_for(k: int, W) -> np.ndarray:
    if W is None:
        W = hamming_weights("S" if k == 7 else "So")
    W = np.asarray(W, dtype=np.float64)
    if W.shape != (k,):
        raise ValueError(f"weight vector of length {W.shape[0] if W.ndim else 0} "
                         f"for vectors of length {k}")
    return W


def hamming(u, v, W=None) -> float:
    """Weighted Hamming distance: mean over k of ``W[k] * (u[k] != v[k])``."""
    u, v = np.asarray(u), np.asarray(v)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"vectors must be 1-D of equal length, got {u.shape} and {v.shape}")
    W = _weights_for(u.shape[0], W)
    return float(np.mean(W * (u != v)))


def _pairwise_hamming(X: np.ndarray, Y: np.ndarray, W: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] != Y[None, :, :]
    return (diff * W).sum(axis=-1) / W.shape[0]


def _matrix(cell, k: int) -> np.ndarray:
    return cell.matrix(k) if isinstance(cell, CellSpec) else np.asarray(cell)


def directed_hausdorff(X, Y, W=None, k: int | None = None) -> float:
    """sup over x in X of inf over y in Y of hamming(x, y)."""
    k = k or (len(W) if W is not None else 12)
    A, B = _matrix(X, k), _matrix(Y, k)
    if A.shape[1] != B.shape[1]:
        raise ValueError("edge vectors differ in length")
    return float(_pairwise_hamming(A, B, _weights_for(A.shape[1], W)).min(axis=1).max())


def hausdorff_cell(X: CellSpec, Y: CellSpec, W=None, k: int | None = None) -> float:
    """Symmetric Hausdorff distance between the edge-vector sets of two cells.

    Note that two cells holding the same multiset of edge vectors on different
    edges are at distance zero.
    """
    if isinstance(X, CellSpec) and isinstance(Y, CellSpec) and X.steps != Y.steps:
        raise ValueError(f"cells have {X.steps} and {Y.steps} steps")
    k = k or (len(W) if W is not None else 12)
    A, B = _matrix(X, k), _matrix(Y, k)
    if A.shape[1] != B.shape[1]:
        raise ValueError("edge vectors differ in length")
    D = _pairwise_hamming(A, B, _weights_for(A.shape[1], W))
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def metric_M(A: Genotype, B: Genotype, W=None) -> float:
    """Mean symmetric Hausdorff distance between the cells at each position.

    With ``W`` omitted the weights come from the score table restricted to
    the genotypes' search space (they must agree).
    """
    if A.n_cells != B.n_cells:
        raise ValueError(f"cannot compare {A.n_cells}-cell and {B.n_cells}-cell genotypes")
    if A.steps != B.steps:
        raise ValueError(f"step counts differ: {A.steps} vs {B.steps}")
    if W is None:
        if A.search_space != B.search_space:
            raise ValueError("genotypes from different search spaces need explicit weights")
        W = hamming_weights(A.search_space)
    W = np.asarray(W, dtype=np.float64)
    k = W.shape[0]
    return float(np.mean([hausdorff_cell(a, b, W, k) for a, b in zip(A.cells, B.cells)]))


def pairwise_matrix(genotypes: Sequence[Genotype], W=None) -> np.ndarray:
    n = len(genotypes)
    if n and len({g.n_cells for g in genotypes}) > 1:
        raise ValueError("all genotypes must have the same cell count")
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = metric_M(genotypes[i], genotypes[j], W)
    return D


def distance_statistics(D: np.ndarray) -> dict:
    """Summary of the off-diagonal entries of a distance matrix."""
    D = np.asarray(D)
    off = D[np.triu_indices(D.shape[0], k=1)]
    if off.size == 0:
        return {"pairs": 0, "mean": 0.0, "std": 0.0, "min": 0.0, "max": 0.0, "median": 0.0}
    return {"pairs": int(off.size), "mean": float(off.mean()), "std": float(off.std()),
            "min": float(off.min()), "max": float(off.max()),
            "median": float(np.median(off))}


def matrix_to_csv(D: np.ndarray, labels: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["", *labels])
    for lab, row in zip(labels, D):
        w.writerow([lab, *(repr(float(x)) for x in row)])
    return buf.getvalue()


# -- early stopping ----------------------------------------------------------

@dataclass
class DistanceTrace:
    """Per-epoch distance between the starting genotype and the current parse."""

    epochs: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def append(self, epoch: int, value: float) -> None:
        if not np.isfinite(value) or value < 0:
            raise ValueError(f"trace values must be finite and >= 0, got {value}")
        if self.epochs and epoch <= self.epochs[-1]:
            raise ValueError(f"epoch {epoch} does not follow {self.epochs[-1]}")
        self.epochs.append(int(epoch))
        self.values.append(float(value))

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(zip(self.epochs, self.values))

    def to_csv(self) -> str:
        lines = ["epoch,distance_du"]
        lines += [f"{e},{v!r}" for e, v in zip(self.epochs, self.values)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_values(cls, values, first_epoch: int = 0) -> "DistanceTrace":
        t = cls()
        for i, v in enumerate(values):
            t.append(first_epoch + i, v)
        return t


def plateau_stop(trace: DistanceTrace | Sequence[float], window: int = 5, start_epoch: int = 10,
                 tolerance: float = 1e-3):
    """First epoch ``e`` whose trailing ``window`` values, all at epochs
    ``>= start_epoch``, span at most ``tolerance``.

    Returns ``(True, e)`` or ``(False, None)``.  A plain sequence is read as
    values for epochs 0, 1, 2, ...
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if not isinstance(trace, DistanceTrace):
        trace = DistanceTrace.from_values(trace)
    pos = {e: v for e, v in zip(trace.epochs, trace.values)}
    for e in trace.epochs:
        lo = e - window + 1
        if lo < start_epoch:
            continue
        vals = [pos.get(t) for t in range(lo, e + 1)]
        if any(v is None for v in vals):
            continue
        if max(vals) - min(vals) <= tolerance:
            return True, e
    return False, None
