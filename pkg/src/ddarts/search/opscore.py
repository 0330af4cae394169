"""Per-operation benchmark on a small proxy network.

For every (operation, edge) pair, the proxy is rebuilt with that edge
carrying only the benchmarked operation in every cell, trained from scratch,
and scored by its best validation accuracy over independent runs.  An
operation's score is the median over edges.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..genotype import CellSpec, Genotype
from ..ops import PRIMITIVES, OpKind
from .data import ImageDataset
from .engine import evaluate, train_discrete
from .network import discrete_network


def default_proxy() -> Genotype:
    """Three residual-block cells: in -> n0 -> n1 convs with an identity shortcut."""
    block = CellSpec.from_ops({(1, 2): [OpKind.SIMPLE_CONV_3X3],
                               (2, 3): [OpKind.SIMPLE_CONV_3X3],
                               (1, 3): [OpKind.SKIP_CONNECT]})
    return Genotype.from_cells([block] * 3, search_space="So", share_identical=True)


def _with_edge(proxy: Genotype, pair: tuple[int, int], op: OpKind) -> Genotype:
    cells = []
    for c in proxy.cells:
        sel = {(e.from_node, e.to_node): list(e.ops) for e in c.edges if e.ops}
        sel[pair] = [op]
        cells.append(CellSpec.from_ops(sel, c.kind, c.steps))
    return Genotype(tuple(cells), proxy.reduction_positions, "So")


def _run(proxy, pair, op, train, val, epochs, channels, batch_size, seed) -> float:
    g = _with_edge(proxy, pair, op)
    if epochs == 0:
        net = discrete_network(np.random.default_rng(seed), g, channels, train.n_classes,
                               train.shape[0])
        return evaluate(net, val, None, batch_size)[1]
    _, hist = train_discrete(g, train, val, epochs, channels, batch_size, seed=seed)
    return max(h[2] for h in hist)


def op_score_benchmark(dataset: ImageDataset, proxy: Genotype | None = None, runs: int = 1,
                       epochs: int = 1, seed: int = 0, channels: int = 4,
                       batch_size: int = 32, workers: int = 1,
                       ops=PRIMITIVES) -> dict[OpKind, float]:
    """Score each operation by median (over proxy edges) of max accuracy over runs.

    Jobs are independent and may run on ``workers`` threads; each job's seed
    comes from the master ``seed`` and the job's position, so results do not
    depend on scheduling.
    """
    if runs < 1 or epochs < 0:
        raise ValueError("need runs >= 1 and epochs >= 0")
    proxy = default_proxy() if proxy is None else proxy
    train, val = dataset.split(seed)
    pairs = sorted({(e.from_node, e.to_node) for c in proxy.cells for e in c.edges if e.ops})
    if not pairs:
        raise ValueError("proxy genotype has no active edge")
    jobs = [(op, pair, r) for op in ops for pair in pairs for r in range(runs)]
    seeds = np.random.SeedSequence(seed).spawn(len(jobs))
    job_seeds = [int(s.generate_state(1)[0]) for s in seeds]

    def work(j):
        op, pair, _ = jobs[j]
        return _run(proxy, pair, op, train, val, epochs, channels, batch_size, job_seeds[j])

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            acc = list(pool.map(work, range(len(jobs))))
    else:
        acc = [work(j) for j in range(len(jobs))]
    best: dict[tuple, float] = {}
    for (op, pair, _), a in zip(jobs, acc):
        best[(op, pair)] = max(best.get((op, pair), 0.0), a)
    return {op: float(np.median([best[(op, p)] for p in pairs])) for op in ops}


def scores_csv(scores: dict) -> str:
    lines = ["op,score"] + [f"{OpKind(k).value},{v!r}" for k, v in scores.items()]
    return "\n".join(lines) + "\n"
