"""Expand a searched genotype into a deeper one without searching again.

The source's normal cells between reductions are cycled to fill the new
depth; its two reduction cells are moved to the new 1/3 and 2/3 positions.
"""
from __future__ import annotations

from dataclasses import dataclass

from .genotype import Genotype, default_reductions


class UnderivableSource(ValueError):
    """The source cell count cannot be stretched to the requested depth."""


def derive_indices(c_count: int, n: int) -> list[int]:
    """Source-cell index for each of the ``n`` output positions.

    Examples
    --------
    >>> derive_indices(8, 14)
    [0, 1, 0, 1, 2, 4, 3, 4, 3, 5, 6, 7, 6, 7]
    >>> derive_indices(8, 4)
    [0, 1, 2, 3]
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if c_count < 1:
        raise ValueError(f"source must hold at least one cell, got {c_count}")
    if n <= c_count:
        return list(range(n))
    if c_count < 3:
        raise UnderivableSource(f"cannot stretch {c_count} cells to {n}: need at least 3")
    m, m2 = c_count // 3, 2 * c_count // 3
    r1, r2 = n // 3, 2 * n // 3
    mid_mod, tail_mod = m2 - 1 - m, c_count - 1 - m2
    out = []
    for i in range(n):
        if i < r1:
            if m == 0:
                raise UnderivableSource(f"({c_count}, {n}): empty leading segment")
            out.append(i % m)
        elif i == r1:
            out.append(m)
        elif i < r2:
            if mid_mod <= 0:
                raise UnderivableSource(f"({c_count}, {n}): no normal cell between reductions")
            out.append(i % mid_mod + m + 1)
        elif i == r2:
            out.append(m2)
        else:
            if tail_mod <= 0:
                raise UnderivableSource(f"({c_count}, {n}): no normal cell after the last "
                                        f"reduction")
            out.append(i % tail_mod + m2 + 1)
    return out


@dataclass(frozen=True)
class DeriveRequest:
    source: Genotype
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")


def derive_genotype(req: DeriveRequest | Genotype, n: int | None = None) -> Genotype:
    """Build an ``n``-cell genotype from ``req.source``.

    Accepts either a `DeriveRequest` or ``(genotype, n)``.  Copies of one
    source cell form one share group.
    """
    if isinstance(req, Genotype):
        if n is None:
            raise TypeError("n is required when passing a genotype")
        req = DeriveRequest(req, n)
    src, n = req.source, req.n
    idx = derive_indices(src.n_cells, n)
    if n <= src.n_cells:
        red = tuple(r for r in src.reduction_positions if r < n)
    else:
        red = default_reductions(n)
    cells = [src.cells[j].with_kind("reduction" if p in red else "normal")
             for p, j in enumerate(idx)]
    groups: dict[tuple, list[int]] = {}
    for p, j in enumerate(idx):
        groups.setdefault((j, cells[p].kind), []).append(p)
    return Genotype(tuple(cells), red, src.search_space, tuple(tuple(g) for g in groups.values()))
