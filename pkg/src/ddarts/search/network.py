"""Cell-based networks: the mixed-operation supernet and its discrete children.

Both share one `Cell` implementation.  A supernet cell carries every op of
the search space on each edge and mixes them with per-op weights; a discrete
cell carries only the ops a genotype selects and sums them.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..autodiff import functional as F
from ..autodiff.nn import Conv2d, Linear, Module
from ..autodiff.primitives import ConvUnit, FactorizedReduce, PrimitiveOp
from ..autodiff.tensor import Tensor
from ..genotype import Genotype, cell_edges
from ..ops import OpKind, space_ops


class Cell(Module):
    def __init__(self, rng, steps: int, c_pp: int, c_p: int, c: int, reduction: bool,
                 reduction_prev: bool, ops_per_edge: Sequence[Sequence[OpKind]]):
        self.steps, self.reduction, self.channels = steps, reduction, c
        self.pairs = cell_edges(steps)
        if len(ops_per_edge) != len(self.pairs):
            raise ValueError(f"{len(ops_per_edge)} op lists for {len(self.pairs)} edges")
        self.pre0 = FactorizedReduce(rng, c_pp, c) if reduction_prev \
            else ConvUnit([Conv2d(rng, c_pp, c, 1)], c)
        self.pre1 = ConvUnit([Conv2d(rng, c_p, c, 1)], c)
        self.kinds = [tuple(OpKind(o) for o in ops) for ops in ops_per_edge]
        self.index = [np.array([o.index for o in ops], dtype=np.intp) for ops in self.kinds]
        self.edges = [
            [PrimitiveOp(o, c, 2 if reduction and i < 2 else 1, rng) for o in ops]
            for (i, _), ops in zip(self.pairs, self.kinds)
        ]

    def forward(self, s0: Tensor, s1: Tensor, weights: Tensor | None = None) -> Tensor:
        """``weights`` is an (n_edges, K) matrix of mixing weights, or None to sum."""
        states = [self.pre0(s0), self.pre1(s1)]
        b, _, h, w = states[1].shape
        if self.reduction:
            h, w = h // 2, w // 2
        inputs: list[list[Tensor]] = [[] for _ in range(self.steps)]
        e = 0
        for j in range(2, self.steps + 2):
            for i in range(j):
                ops = self.edges[e]
                if ops:
                    x = states[i]
                    terms = [op(x) for op in ops]
                    if weights is None:
                        inputs[j - 2].append(F.add_n(terms) if len(terms) > 1 else terms[0])
                    else:
                        inputs[j - 2].append(F.weighted_sum(weights[e, self.index[e]], terms))
                e += 1
            node = inputs[j - 2]
            if node:
                states.append(F.add_n(node) if len(node) > 1 else node[0])
            else:
                # a node without incoming ops contributes nothing
                states.append(Tensor(np.zeros((b, self.channels, h, w))))
        return F.concat(states[2:], axis=1)


def bypass(x: Tensor, reduction: bool) -> Tensor:
    """Parameter-free stand-in for a deactivated cell."""
    if not reduction:
        return x
    y = F.avg_pool2d(x, 2, 2, 0)
    return F.concat([y, y], axis=1)


class Network(Module):
    """Stem, a stack of cells, global pooling and a linear classifier.

    Parameters
    ----------
    rng : numpy.random.Generator
    layout : list of per-cell op lists, one list of OpKinds per edge
    reduction_positions : cells that halve resolution and double channels
    steps : intermediate nodes per cell
    channels : initial cell width C
    n_classes, in_channels : data dimensions
    """

    def __init__(self, rng, layout, reduction_positions, steps: int = 4, channels: int = 4,
                 n_classes: int = 10, in_channels: int = 3):
        self.steps, self.n_classes = steps, n_classes
        self.reduction_positions = tuple(sorted(reduction_positions))
        c_stem = steps * channels
        self.stem = ConvUnit([Conv2d(rng, in_channels, c_stem, 3, 1, 1)], c_stem)
        c_pp, c_p, c = c_stem, c_stem, channels
        red_prev = False
        self.cells = []
        for i, ops in enumerate(layout):
            red = i in self.reduction_positions
            if red:
                c *= 2
            self.cells.append(Cell(rng, steps, c_pp, c_p, c, red, red_prev, ops))
            c_pp, c_p, red_prev = c_p, steps * c, red
        self.classifier = Linear(rng, c_p, n_classes, zero=True)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def forward(self, x, weights: Sequence[Tensor | None] | None = None,
                drop: Sequence[int] = ()) -> Tensor:
        """Logits for a batch ``x``; cells listed in ``drop`` are bypassed."""
        x = x if isinstance(x, Tensor) else Tensor(x)
        s0 = s1 = self.stem(x)
        for i, cell in enumerate(self.cells):
            if i in drop:
                out = bypass(s1, cell.reduction)
            else:
                out = cell(s0, s1, None if weights is None else weights[i])
            s0, s1 = s1, out
        return self.classifier(F.global_avg_pool(s1))


def supernet(rng, n_cells: int, search_space: str = "S", steps: int = 4, channels: int = 4,
             n_classes: int = 10, in_channels: int = 3, reduction_positions=None,
             allowed: Sequence[OpKind] | None = None) -> Network:
    """Network with every op of ``search_space`` (or of ``allowed``) on every edge."""
    from ..genotype import default_reductions
    ops = tuple(allowed) if allowed is not None else space_ops(search_space)
    layout = [[ops] * len(cell_edges(steps)) for _ in range(n_cells)]
    layout = [list(c) for c in layout]
    red = default_reductions(n_cells) if reduction_positions is None else reduction_positions
    return Network(rng, layout, red, steps, channels, n_classes, in_channels)


def discrete_network(rng, genotype: Genotype, channels: int = 4, n_classes: int = 10,
                     in_channels: int = 3) -> Network:
    layout = [[e.ops for e in c.edges] for c in genotype.cells]
    return Network(rng, layout, genotype.reduction_positions, genotype.steps, channels,
                   n_classes, in_channels)
