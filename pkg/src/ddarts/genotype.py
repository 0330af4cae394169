"""Discrete architecture descriptions and their JSON document format.

A cell is a DAG over ``steps + 2`` nodes: nodes 0 and 1 are the outputs of the
two preceding cells, nodes ``2 .. steps + 1`` are intermediate.  Every
intermediate node ``j`` has one edge from each earlier node, and each edge
selects at most two operations.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .ops import OpKind, space_ops

DEFAULT_STEPS = 4
MAX_OPS_PER_EDGE = 2


class GenotypeError(ValueError):
    """Base class for invalid genotypes; ``location`` names the offending field."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class MalformedDocument(GenotypeError):
    pass


class UnknownOperation(GenotypeError):
    pass


class InvariantViolation(GenotypeError):
    pass


def cell_edges(steps: int) -> list[tuple[int, int]]:
    """Canonical (from, to) pairs of a cell with ``steps`` intermediate nodes."""
    return [(i, j) for j in range(2, steps + 2) for i in range(j)]


def edge_count(steps: int) -> int:
    return sum(k + 2 for k in range(steps))


def default_reductions(n_cells: int) -> tuple[int, ...]:
    return tuple(sorted({n_cells // 3, 2 * n_cells // 3}))


@dataclass(frozen=True)
class EdgeSpec:
    from_node: int
    to_node: int
    ops: tuple[OpKind, ...] = ()

    def __post_init__(self):
        ops = tuple(OpKind(o) for o in self.ops)
        if len(set(ops)) != len(ops):
            raise InvariantViolation(f"duplicate operation on edge {self.from_node}->{self.to_node}")
        if len(ops) > MAX_OPS_PER_EDGE:
            raise InvariantViolation(
                f"edge {self.from_node}->{self.to_node} selects {len(ops)} ops "
                f"(at most {MAX_OPS_PER_EDGE})")
        if not 0 <= self.from_node < self.to_node:
            raise InvariantViolation(f"edge {self.from_node}->{self.to_node} is not forward")
        object.__setattr__(self, "ops", tuple(sorted(ops, key=lambda o: o.index)))

    def vector(self, k: int) -> np.ndarray:
        """Binary selection vector over the first ``k`` operations."""
        v = np.zeros(k, dtype=np.int8)
        for op in self.ops:
            if op.index >= k:
                raise InvariantViolation(f"{op.value} lies outside a {k}-op search space")
            v[op.index] = 1
        return v


@dataclass(frozen=True)
class CellSpec:
    edges: tuple[EdgeSpec, ...]
    kind: str = "normal"
    steps: int = DEFAULT_STEPS

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))
        if self.kind not in ("normal", "reduction"):
            raise InvariantViolation(f"cell kind must be normal or reduction, got {self.kind!r}")
        if self.steps < 1:
            raise InvariantViolation(f"steps must be >= 1, got {self.steps}")
        got = [(e.from_node, e.to_node) for e in self.edges]
        if got != cell_edges(self.steps):
            raise InvariantViolation(
                f"edges must cover the {edge_count(self.steps)} pairs of a "
                f"{self.steps}-step cell in canonical order")

    @classmethod
    def from_ops(cls, selection: Mapping[tuple[int, int], Iterable], kind: str = "normal",
                 steps: int = DEFAULT_STEPS) -> "CellSpec":
        """Build a cell from ``{(from, to): [op, ...]}``; unlisted edges are empty."""
        unknown = set(selection) - set(cell_edges(steps))
        if unknown:
            raise InvariantViolation(f"edges {sorted(unknown)} do not exist in a {steps}-step cell")
        edges = [EdgeSpec(i, j, tuple(selection.get((i, j), ()))) for i, j in cell_edges(steps)]
        return cls(tuple(edges), kind, steps)

    @classmethod
    def empty(cls, kind: str = "normal", steps: int = DEFAULT_STEPS) -> "CellSpec":
        return cls.from_ops({}, kind, steps)

    def matrix(self, k: int) -> np.ndarray:
        """(n_edges, k) binary selection matrix."""
        return np.stack([e.vector(k) for e in self.edges])

    def with_kind(self, kind: str) -> "CellSpec":
        return CellSpec(self.edges, kind, self.steps)


@dataclass(frozen=True)
class Genotype:
    cells: tuple[CellSpec, ...]
    reduction_positions: tuple[int, ...]
    search_space: str = "S"
    share_groups: tuple[tuple[int, ...], ...] = field(default=None)

    def __post_init__(self):
        cells = tuple(self.cells)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "reduction_positions",
                           tuple(sorted(set(int(i) for i in self.reduction_positions))))
        groups = self.share_groups
        if groups is None:
            groups = [(i,) for i in range(len(cells))]
        groups = tuple(sorted(tuple(sorted(int(i) for i in g)) for g in groups))
        object.__setattr__(self, "share_groups", groups)
        self._validate()

    def _validate(self) -> None:
        n = len(self.cells)
        if n == 0:
            raise InvariantViolation("a genotype needs at least one cell", "cells")
        ops = space_ops(self.search_space)
        k = len(ops)
        steps = self.cells[0].steps
        for ci, cell in enumerate(self.cells):
            if cell.steps != steps:
                raise InvariantViolation(f"cell has {cell.steps} steps, expected {steps}",
                                         f"cells[{ci}]")
            for ei, e in enumerate(cell.edges):
                for op in e.ops:
                    if op.index >= k:
                        raise InvariantViolation(
                            f"{op.value} is not part of search space {self.search_space}",
                            f"cells[{ci}].edges[{ei}].ops")
            expect = "reduction" if ci in self.reduction_positions else "normal"
            if cell.kind != expect:
                raise InvariantViolation(f"cell kind {cell.kind!r} but position implies "
                                         f"{expect!r}", f"cells[{ci}].kind")
        bad = [i for i in self.reduction_positions if not 0 <= i < n]
        if bad:
            raise InvariantViolation(f"positions {bad} outside 0..{n - 1}", "reduction_positions")
        flat = [i for g in self.share_groups for i in g]
        if any(len(g) == 0 for g in self.share_groups):
            raise InvariantViolation("empty share group", "share_groups")
        if sorted(flat) != list(range(n)):
            raise InvariantViolation("share groups must partition the cell indices",
                                     "share_groups")
        for gi, g in enumerate(self.share_groups):
            if any(self.cells[i] != self.cells[g[0]] for i in g):
                raise InvariantViolation("cells sharing weights must be identical",
                                         f"share_groups[{gi}]")

    @property
    def steps(self) -> int:
        return self.cells[0].steps

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def k(self) -> int:
        return len(space_ops(self.search_space))

    def group_of(self, cell: int) -> int:
        for gi, g in enumerate(self.share_groups):
            if cell in g:
                return gi
        raise IndexError(cell)

    @classmethod
    def from_cells(cls, cells: Iterable[CellSpec], search_space: str = "S",
                   reduction_positions: Iterable[int] | None = None,
                   share_identical: bool = False) -> "Genotype":
        """Assemble a genotype, setting each cell's kind from its position.

        With ``share_identical`` every set of equal cells becomes one share group.
        """
        cells = list(cells)
        red = default_reductions(len(cells)) if reduction_positions is None \
            else tuple(reduction_positions)
        cells = [c.with_kind("reduction" if i in red else "normal") for i, c in enumerate(cells)]
        groups = None
        if share_identical:
            seen: dict[CellSpec, list[int]] = {}
            for i, c in enumerate(cells):
                seen.setdefault(c, []).append(i)
            groups = [tuple(v) for v in seen.values()]
        return cls(tuple(cells), red, search_space, groups)


# -- document format ---------------------------------------------------------

def to_document(g: Genotype) -> dict:
    return {
        "search_space": g.search_space,
        "steps": g.steps,
        "reduction_positions": list(g.reduction_positions),
        "share_groups": [list(grp) for grp in g.share_groups],
        "cells": [
            {"kind": c.kind,
             "edges": [{"from": e.from_node, "to": e.to_node,
                        "ops": [op.value for op in e.ops]} for e in c.edges]}
            for c in g.cells
        ],
    }


def serialize(g: Genotype) -> bytes:
    return (json.dumps(to_document(g), indent=2) + "\n").encode("utf-8")


def _require(doc: dict, key: str, kind, where: str):
    if key not in doc:
        raise MalformedDocument(f"missing field {key!r}", where or "<root>")
    value = doc[key]
    if not isinstance(value, kind) or isinstance(value, bool):
        name = kind.__name__ if isinstance(kind, type) else "/".join(t.__name__ for t in kind)
        raise MalformedDocument(f"expected {name}, got {type(value).__name__}",
                                f"{where}.{key}" if where else key)
    return value


def _int_list(value, where: str) -> list[int]:
    if not isinstance(value, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise MalformedDocument("expected a list of integers", where)
    return value


def from_document(doc) -> Genotype:
    if not isinstance(doc, dict):
        raise MalformedDocument("top level must be an object", "<root>")
    space = _require(doc, "search_space", str, "")
    if space not in ("S", "So"):
        raise MalformedDocument(f"search_space must be 'S' or 'So', got {space!r}",
                                "search_space")
    steps = _require(doc, "steps", int, "")
    reds = _int_list(_require(doc, "reduction_positions", list, ""), "reduction_positions")
    raw_groups = _require(doc, "share_groups", list, "")
    groups = [tuple(_int_list(g, f"share_groups[{i}]")) for i, g in enumerate(raw_groups)]
    cells_doc = _require(doc, "cells", list, "")
    cells = []
    for ci, cdoc in enumerate(cells_doc):
        where = f"cells[{ci}]"
        if not isinstance(cdoc, dict):
            raise MalformedDocument("cell must be an object", where)
        kind = _require(cdoc, "kind", str, where)
        edges_doc = _require(cdoc, "edges", list, where)
        selection: dict[tuple[int, int], list[OpKind]] = {}
        for ei, edoc in enumerate(edges_doc):
            ew = f"{where}.edges[{ei}]"
            if not isinstance(edoc, dict):
                raise MalformedDocument("edge must be an object", ew)
            i = _require(edoc, "from", int, ew)
            j = _require(edoc, "to", int, ew)
            names = _require(edoc, "ops", list, ew)
            ops = []
            for oi, name in enumerate(names):
                try:
                    ops.append(OpKind(name))
                except ValueError:
                    raise UnknownOperation(f"unknown operation {name!r}",
                                           f"{ew}.ops[{oi}]") from None
            if (i, j) in selection:
                raise InvariantViolation(f"edge {i}->{j} listed twice", ew)
            try:
                EdgeSpec(i, j, tuple(ops))
            except InvariantViolation as exc:
                raise InvariantViolation(str(exc), ew) from None
            selection[(i, j)] = ops
        missing = set(cell_edges(steps)) - set(selection)
        if missing:
            raise InvariantViolation(f"missing edges {sorted(missing)}", f"{where}.edges")
        try:
            cells.append(CellSpec.from_ops(selection, kind, steps))
        except InvariantViolation as exc:
            raise InvariantViolation(str(exc), where) from None
    return Genotype(tuple(cells), tuple(reds), space, tuple(groups))


def deserialize(data: bytes | str) -> Genotype:
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedDocument(f"not valid JSON ({exc})", "<document>") from None
    return from_document(doc)


def save(g: Genotype, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(g))


def load(path) -> Genotype:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
