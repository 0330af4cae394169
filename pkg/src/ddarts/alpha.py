"""Continuous architecture parameters and their discretization.

An ``AlphaTable`` holds one (n_edges, K) logit matrix per share group; every
cell of a group reads the same matrix.  ``parse_alpha`` turns a table into a
`Genotype`, ``genotype_to_alpha`` goes the other way.
"""
from __future__ import annotations

import json
import warnings
from typing import Sequence

import numpy as np

from .autodiff.tensor import Tensor, sigmoid, softmax
from .genotype import (DEFAULT_STEPS, CellSpec, EdgeSpec, Genotype, cell_edges,
                       default_reductions, edge_count)
from .ops import space_ops

PARSE_METHODS = ("darts", "edge", "sparse")
DEFAULT_THRESHOLD = 0.85


class AlphaTable:
    """Per-group logit matrices with a cell -> group map.

    Parameters
    ----------
    tables : sequence of array_like
        One (n_edges, K) matrix per share group.
    share_groups : sequence of sequence of int
        Partition of the cell indices; group ``g`` reads ``tables[g]``.
    search_space : {"S", "So"}
    steps : int
    reduction_positions : sequence of int, optional
        Defaults to the 1/3 and 2/3 positions.
    """

    def __init__(self, tables, share_groups, search_space: str = "S",
                 steps: int = DEFAULT_STEPS, reduction_positions=None):
        self.search_space = search_space
        self.steps = int(steps)
        k = len(space_ops(search_space))
        groups = [tuple(int(i) for i in g) for g in share_groups]
        n = sum(len(g) for g in groups)
        if sorted(i for g in groups for i in g) != list(range(n)) or any(not g for g in groups):
            raise ValueError("share groups must partition 0..n_cells-1")
        if len(tables) != len(groups):
            raise ValueError(f"{len(tables)} tables for {len(groups)} share groups")
        shape = (edge_count(self.steps), k)
        params = []
        for gi, t in enumerate(tables):
            data = t.data if isinstance(t, Tensor) else np.asarray(t, dtype=np.float64)
            if data.shape != shape:
                raise ValueError(f"table {gi} has shape {data.shape}, expected {shape}")
            if not np.all(np.isfinite(data)):
                raise ValueError(f"table {gi} holds non-finite logits")
            params.append(t if isinstance(t, Tensor) else Tensor(data.copy(), requires_grad=True))
        self.tables: list[Tensor] = params
        self.share_groups = groups
        self.n_cells = n
        self.reduction_positions = tuple(sorted(
            default_reductions(n) if reduction_positions is None else reduction_positions))
        self._group_of = {i: gi for gi, g in enumerate(groups) for i in g}

    @classmethod
    def zeros(cls, n_cells: int, search_space: str = "S", steps: int = DEFAULT_STEPS,
              share_groups=None, reduction_positions=None, scale: float = 0.0,
              rng: np.random.Generator | None = None) -> "AlphaTable":
        """Table of zeros, or of N(0, scale^2) logits when ``scale > 0``."""
        groups = [(i,) for i in range(n_cells)] if share_groups is None else share_groups
        shape = (edge_count(steps), len(space_ops(search_space)))
        if scale > 0:
            rng = np.random.default_rng(0) if rng is None else rng
            tables = [scale * rng.standard_normal(shape) for _ in groups]
        else:
            tables = [np.zeros(shape) for _ in groups]
        return cls(tables, groups, search_space, steps, reduction_positions)

    @property
    def k(self) -> int:
        return len(space_ops(self.search_space))

    @property
    def n_edges(self) -> int:
        return edge_count(self.steps)

    def group_of(self, cell: int) -> int:
        return self._group_of[cell]

    def cell(self, i: int) -> Tensor:
        return self.tables[self._group_of[i]]

    def cell_logits(self, i: int) -> np.ndarray:
        return self.tables[self._group_of[i]].data

    def values(self) -> np.ndarray:
        """All distinct logits, one row per (group, edge)."""
        return np.concatenate([t.data for t in self.tables])

    def copy(self) -> "AlphaTable":
        return AlphaTable([t.data.copy() for t in self.tables], self.share_groups,
                          self.search_space, self.steps, self.reduction_positions)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlphaTable):
            return NotImplemented
        return (self.search_space == other.search_space and self.steps == other.steps
                and self.share_groups == other.share_groups
                and self.reduction_positions == other.reduction_positions
                and all(np.array_equal(a.data, b.data) for a, b in zip(self.tables, other.tables)))

    def __repr__(self) -> str:
        return (f"AlphaTable(cells={self.n_cells}, groups={len(self.tables)}, "
                f"space={self.search_space}, steps={self.steps})")

    # -- document ------------------------------------------------------------
    def to_document(self) -> dict:
        return {
            "search_space": self.search_space,
            "steps": self.steps,
            "reduction_positions": list(self.reduction_positions),
            "share_groups": [list(g) for g in self.share_groups],
            "tables": [t.data.tolist() for t in self.tables],
        }

    @classmethod
    def from_document(cls, doc: dict) -> "AlphaTable":
        try:
            return cls(doc["tables"], doc["share_groups"], doc["search_space"], doc["steps"],
                       doc["reduction_positions"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed alpha document: {exc}") from None

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_document(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "AlphaTable":
        with open(path) as fh:
            return cls.from_document(json.load(fh))


def genotype_to_alpha(g: Genotype, hot: float = 3.0, cold: float = -3.0) -> AlphaTable:
    """Logits equal to ``hot`` on selected ops and ``cold`` elsewhere, one table per share group."""
    if not hot > cold:
        raise ValueError(f"need hot > cold, got hot={hot}, cold={cold}")
    k = g.k
    tables = []
    for grp in g.share_groups:
        sel = g.cells[grp[0]].matrix(k)
        tables.append(np.where(sel == 1, float(hot), float(cold)))
    return AlphaTable(tables, g.share_groups, g.search_space, g.steps, g.reduction_positions)


# -- parsing ----------------------------------------------------------------

def _top(values: np.ndarray, count: int) -> list[int]:
    # stable sort on -value puts lower indices first among ties
    return [int(i) for i in np.argsort(-values, kind="stable")[:count]]


def _parse_edge_ops(logits: np.ndarray, threshold: float, cap: int) -> list[list[int]]:
    s = sigmoid(logits)
    picks = []
    for row in s:
        above = np.flatnonzero(row > threshold)
        if above.size:
            chosen = sorted(above, key=lambda k: (-row[k], k))[:cap]
        else:
            best = _top(row, 1)[0]
            # a cold edge (every op below one half) stays empty
            chosen = [best] if row[best] >= 0.5 else []
        picks.append(sorted(int(c) for c in chosen))
    return picks


def _parse_darts(logits: np.ndarray, steps: int) -> list[list[int]]:
    w = softmax(logits, axis=-1)
    pairs = cell_edges(steps)
    picks: list[list[int]] = [[] for _ in pairs]
    for j in range(2, steps + 2):
        rows = [e for e, (_, to) in enumerate(pairs) if to == j]
        strength = np.array([w[e].max() for e in rows])
        # rows are ordered by from_node, so stable ordering breaks ties toward lower sources
        for r in _top(strength, 2):
            e = rows[r]
            picks[e] = [_top(w[e], 1)[0]]
    return picks


def parse_cell(logits: np.ndarray, steps: int, method: str = "edge",
               threshold: float = DEFAULT_THRESHOLD, kind: str = "normal",
               search_space: str = "S") -> CellSpec:
    ops = space_ops(search_space)
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape != (edge_count(steps), len(ops)):
        raise ValueError(f"logits of shape {logits.shape} do not match a {steps}-step cell "
                         f"with {len(ops)} ops")
    if method == "edge":
        picks = _parse_edge_ops(logits, threshold, 2)
    elif method == "sparse":
        picks = _parse_edge_ops(logits, threshold, 1)
    elif method == "darts":
        picks = _parse_darts(logits, steps)
    else:
        raise ValueError(f"unknown parse method {method!r}; expected one of {PARSE_METHODS}")
    edges = [EdgeSpec(i, j, tuple(ops[k] for k in p))
             for (i, j), p in zip(cell_edges(steps), picks)]
    return CellSpec(tuple(edges), kind, steps)


def parse_alpha(alpha: AlphaTable, method: str = "edge",
                threshold: float = DEFAULT_THRESHOLD) -> Genotype:
    """Discretize ``alpha`` into a genotype.

    ``edge`` keeps up to two ops per edge with sigmoid above ``threshold``;
    ``sparse`` keeps one.  When no op clears the threshold the argmax op is
    kept, unless even that one sits below one half.  ``darts`` keeps, for each
    intermediate node, the two incoming edges with the strongest softmax
    weight and the single best op on each.  Ties go to the lower op ordinal,
    then to the lower source node.
    """
    if method not in PARSE_METHODS:
        raise ValueError(f"unknown parse method {method!r}; expected one of {PARSE_METHODS}")
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    if method == "darts" and alpha.search_space != "S":
        warnings.warn("darts parsing on the extended search space is an extrapolation",
                      stacklevel=2)
    red = set(alpha.reduction_positions)
    parsed = [parse_cell(t.data, alpha.steps, method, threshold, search_space=alpha.search_space)
              for t in alpha.tables]
    cells = [parsed[alpha.group_of(i)].with_kind("reduction" if i in red else "normal")
             for i in range(alpha.n_cells)]
    # a group spanning both cell kinds splits into one weight-sharing group per kind
    groups = []
    for grp in alpha.share_groups:
        for kind in ("normal", "reduction"):
            part = tuple(i for i in grp if cells[i].kind == kind)
            if part:
                groups.append(part)
    return Genotype(tuple(cells), tuple(alpha.reduction_positions), alpha.search_space,
                    tuple(groups))


def dominant_fraction(alpha: AlphaTable | Sequence[np.ndarray] | np.ndarray,
                      high: float = 0.9, low: float = 0.1) -> tuple[float, float]:
    """Fractions of logits with sigmoid above ``high`` and below ``low``."""
    if isinstance(alpha, AlphaTable):
        values = alpha.values()
    elif isinstance(alpha, np.ndarray):
        values = alpha
    else:
        values = np.concatenate([np.ravel(getattr(a, "data", a)) for a in alpha])
    s = sigmoid(np.ravel(values))
    if s.size == 0:
        return 0.0, 0.0
    return float(np.mean(s > high)), float(np.mean(s < low))
