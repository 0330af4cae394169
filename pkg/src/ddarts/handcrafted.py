"""Genotype encodings of well-known handcrafted networks in the extended space.

Node 1 is the most recent cell input and nodes 2, 3, ... are the intermediate
nodes, so ``(1, 2)`` is the edge input -> n0.  The encodings are frozen
constants; changing them changes every distance computed against them.
"""
from __future__ import annotations

from .genotype import CellSpec, Genotype
from .ops import OpKind as O

IN, N0, N1, N2 = 1, 2, 3, 4

_RESNET18_BLOCK = {
    (IN, N0): [O.SIMPLE_CONV_3X3],
    (N0, N1): [O.SIMPLE_CONV_3X3],
    (IN, N1): [O.SKIP_CONNECT],
}

_RESNET50_BLOCK = {
    (IN, N0): [O.BOTTLENECK_1X3X1, O.SKIP_CONNECT],
}

# entry stem: two plain 3x3 convolutions
_XC_STEM = {
    (IN, N0): [O.SIMPLE_CONV_3X3],
    (N0, N1): [O.SIMPLE_CONV_3X3],
}
# entry/exit block: two separable convs with a projected 1x1 shortcut
_XC_BLOCK = {
    (IN, N0): [O.SEP_CONV_3X3],
    (N0, N1): [O.SEP_CONV_3X3],
    (IN, N1): [O.SIMPLE_CONV_1X1],
}
# downsampling block: separable pair, pooling, projected shortcut
_XC_REDUCE = {
    (IN, N0): [O.SEP_CONV_3X3],
    (N0, N1): [O.SEP_CONV_3X3],
    (N1, N2): [O.MAX_POOL_3X3],
    (IN, N2): [O.SIMPLE_CONV_1X1],
}
# middle flow: three separable convs around an identity shortcut
_XC_MIDDLE = {
    (IN, N0): [O.SEP_CONV_3X3],
    (N0, N1): [O.SEP_CONV_3X3],
    (N1, N2): [O.SEP_CONV_3X3],
    (IN, N2): [O.SKIP_CONNECT],
}
# exit: separable chain without shortcut
_XC_EXIT = {
    (IN, N0): [O.SEP_CONV_3X3],
    (N0, N1): [O.SEP_CONV_3X3],
}

_XC_LAYOUT = [_XC_STEM, _XC_BLOCK, _XC_BLOCK, _XC_BLOCK, _XC_REDUCE,
              _XC_MIDDLE, _XC_MIDDLE, _XC_MIDDLE, _XC_REDUCE,
              _XC_MIDDLE, _XC_MIDDLE, _XC_BLOCK, _XC_EXIT]

HANDCRAFTED = ("resnet18", "resnet50", "xception")


def encode_handcrafted(name: str, steps: int = 4) -> Genotype:
    """Return the frozen ``So`` genotype for ``name``.

    Cells with identical specifications are placed in one share group.

    >>> g = encode_handcrafted("xception")
    >>> g.n_cells, len(g.share_groups)
    (13, 5)
    """
    if name == "resnet18":
        layout = [_RESNET18_BLOCK] * 4
    elif name == "resnet50":
        layout = [_RESNET50_BLOCK] * 4
    elif name == "xception":
        layout = _XC_LAYOUT
    else:
        raise ValueError(f"unknown handcrafted network {name!r}; expected one of {HANDCRAFTED}")
    cells = [CellSpec.from_ops(sel, steps=steps) for sel in layout]
    return Genotype.from_cells(cells, search_space="So", share_identical=True)
