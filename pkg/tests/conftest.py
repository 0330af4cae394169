import numpy as np
import pytest
from hypothesis import settings, strategies as st

from ddarts.genotype import CellSpec, Genotype, cell_edges
from ddarts.ops import space_ops

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def random_cell(rng, k=12, steps=4, p_empty=0.2, kind="normal"):
    ops = space_ops("So" if k == 12 else "S")
    sel = {}
    for e in cell_edges(steps):
        r = rng.random()
        if r < p_empty:
            continue
        count = 1 if r < 0.6 else 2
        sel[e] = [ops[i] for i in rng.choice(k, size=count, replace=False)]
    return CellSpec.from_ops(sel, kind, steps)


def random_genotype(rng, n_cells=4, k=12, steps=4):
    cells = [random_cell(rng, k, steps) for _ in range(n_cells)]
    return Genotype.from_cells(cells, search_space="So" if k == 12 else "S")


@st.composite
def genotypes(draw, n_cells=None, k=12):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(1, 6)) if n_cells is None else n_cells
    return random_genotype(np.random.default_rng(seed), n, k)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
