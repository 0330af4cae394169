"""Bi-level architecture search over a supernet with per-cell architecture optimizers.

Each step updates the architecture logits on a validation batch (one Adam
per share group, each minimizing its own loss) and then the network weights
on a training batch.  Four modes are supported:

``ddarts``     sigmoid mixing, one table per cell, loss ce + w01*L01 + w_abl*L_AB
``fairdarts``  sigmoid mixing, one table per cell kind, loss ce + w01*L01
``darts``      softmax mixing, one table per cell kind, loss ce
``dartopti``   ddarts warm-started from a genotype in the extended space, with
               weight-only pretraining, shared tables and plateau stopping
"""
from __future__ import annotations

import hashlib
import itertools
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..alpha import AlphaTable, genotype_to_alpha, parse_alpha
from ..autodiff import functional as F
from ..autodiff.tensor import Tensor, no_grad
from ..genotype import Genotype, default_reductions
from ..metric import DistanceTrace, metric_M, plateau_stop
from ..ops import hamming_weights
from .data import ImageDataset
from .losses import LossConfig, total_loss, zero_one_loss
from .network import Network, discrete_network, supernet
from .optim import SGD, Adam, clip_grad_norm, cosine_lr

MODES = ("ddarts", "dartopti", "darts", "fairdarts")
METRIC_COLUMNS = ("epoch", "train_loss", "val_loss", "val_top1", "l01", "mean_mc",
                  "distance_du", "epoch_seconds")


class SearchDivergence(RuntimeError):
    """A loss or parameter became non-finite."""


@dataclass
class SearchConfig:
    mode: str = "ddarts"
    epochs: int = 30
    batch_size: int = 32
    cells: int = 8
    steps: int = 4
    channels: int = 4
    search_space: str | None = None      # S, or So in dartopti mode
    w01: float = 7.0
    w_abl: float = 0.5
    alpha_lr: float = 3e-4
    alpha_weight_decay: float = 1e-3
    alpha_init_scale: float = 1e-3
    weight_lr: float = 0.025
    weight_lr_min: float = 1e-3
    momentum: float = 0.9
    weight_decay: float = 3e-4
    grad_clip: float = 5.0
    parse_method: str = "edge"
    threshold: float = 0.85
    pretrain_epochs: int = 5
    hot: float = 3.0
    cold: float = -3.0
    early_stop: bool = True
    plateau_window: int = 5
    plateau_start: int = 10
    plateau_tolerance: float = 1e-3
    seed: int = 0
    timing: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.parse_method not in ("darts", "edge", "sparse"):
            raise ValueError(f"unknown parse method {self.parse_method!r}")
        if not 0 < self.threshold < 1:
            raise ValueError(f"threshold must lie in (0, 1), got {self.threshold}")
        for name in ("epochs", "pretrain_epochs"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("batch_size", "cells", "steps", "channels", "plateau_window"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.alpha_lr < 0 or self.weight_lr < 0:
            raise ValueError("learning rates must be >= 0")
        if self.search_space not in (None, "S", "So"):
            raise ValueError(f"unknown search space {self.search_space!r}")
        LossConfig(self.w01, self.w_abl)

    @property
    def loss(self) -> LossConfig:
        if self.mode == "darts":
            return LossConfig(0.0, 0.0)
        if self.mode == "fairdarts":
            return LossConfig(self.w01, 0.0)
        return LossConfig(self.w01, self.w_abl)

    def replace(self, **kw) -> "SearchConfig":
        d = asdict(self)
        d.update(kw)
        return SearchConfig(**d)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


class SearchState:
    """Everything a search run mutates: weights, logits, optimizers, trace.

    Build with `SearchState.create`.  Cells in one share group read one logit
    table and step one optimizer.
    """

    def __init__(self, cfg: SearchConfig, net: Network, alpha: AlphaTable, start: Genotype,
                 train: ImageDataset, val: ImageDataset):
        self.cfg, self.net, self.alpha, self.start = cfg, net, alpha, start
        self.train, self.val = train, val
        self.loss_cfg = cfg.loss
        self.mix = "softmax" if cfg.mode == "darts" else "sigmoid"
        self.weights = net.parameters()
        self.w_opt = SGD(self.weights, cfg.weight_lr, cfg.momentum, cfg.weight_decay)
        self.a_opts = [Adam([t], cfg.alpha_lr, weight_decay=cfg.alpha_weight_decay)
                       for t in alpha.tables]
        self.epoch = 0
        self.trace = DistanceTrace()
        self.metric_w = hamming_weights(alpha.search_space)
        self.order_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2]))

    @classmethod
    def create(cls, cfg: SearchConfig, dataset: ImageDataset,
               start: Genotype | None = None) -> "SearchState":
        if len(dataset) < 2:
            raise ValueError("dataset must hold at least two samples")
        train, val = dataset.split(cfg.seed)
        if len(train) == 0 or len(val) == 0:
            raise ValueError("dataset split produced an empty half")
        init_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0]))
        alpha_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
        if cfg.mode == "dartopti":
            if start is None:
                raise ValueError("dartopti mode needs a starting genotype")
            alpha = genotype_to_alpha(start, cfg.hot, cfg.cold)
            space, n, red = start.search_space, start.n_cells, start.reduction_positions
            steps = start.steps
        else:
            space = cfg.search_space or "S"
            n = cfg.cells if start is None else start.n_cells
            red = default_reductions(n) if start is None else start.reduction_positions
            steps = cfg.steps if start is None else start.steps
            if cfg.mode == "ddarts":
                groups = [(i,) for i in range(n)]
            else:
                groups = [tuple(i for i in range(n) if i not in red),
                          tuple(i for i in range(n) if i in red)]
                groups = [g for g in groups if g]
            alpha = AlphaTable.zeros(n, space, steps, groups, red, cfg.alpha_init_scale,
                                     alpha_rng)
        net = supernet(init_rng, n, space, steps, cfg.channels, dataset.n_classes,
                       dataset.shape[0], red)
        if start is None:
            # the reference point for the distance trace is the initial parse
            start = parse_alpha(alpha, "edge", cfg.threshold)
        return cls(cfg, net, alpha, start, train, val)

    # -- forward helpers -----------------------------------------------------
    def cell_weights(self) -> list[Tensor]:
        if self.mix == "softmax":
            per_group = [t.softmax(axis=-1) for t in self.alpha.tables]
        else:
            per_group = [t.sigmoid() for t in self.alpha.tables]
        return [per_group[self.alpha.group_of(i)] for i in range(self.alpha.n_cells)]

    def logits(self, x, drop=()) -> Tensor:
        return self.net(x, self.cell_weights(), drop)

    def marginal_contributions(self, x, y) -> np.ndarray:
        """``L(all cells) - L(without cell i)`` for each cell, on one batch.

        Uses batch statistics without touching running statistics, and no graph.
        """
        full, ablated = self._ablation_losses(x, y)
        return full - ablated

    def _ablation_losses(self, x, y):
        self.net.set_norm_mode("frozen")
        with no_grad():
            full = F.cross_entropy(self.logits(x), y).item()
            ablated = np.array([F.cross_entropy(self.logits(x, drop=(i,)), y).item()
                                for i in range(self.net.n_cells)])
        return full, ablated

    # -- steps ---------------------------------------------------------------
    def alpha_step(self, x, y, groups=None) -> dict:
        """One architecture update on a validation batch.

        ``groups`` restricts which share groups step (default: all).
        """
        cfg = self.loss_cfg
        self.net.set_norm_mode("frozen")
        for t in self.alpha.tables:
            t.grad = None
        with _frozen(self.weights):
            ce = F.cross_entropy(self.logits(x), y)
        self._check(ce.item(), "validation loss")
        ce.backward()
        ablated = mean_mc = None
        if cfg.w_abl > 0:
            full, ablated = self._ablation_losses(x, y)
            mean_mc = float(np.mean(full - ablated))
        todo = range(len(self.alpha.tables)) if groups is None else groups
        for g in todo:
            table = self.alpha.tables[g]
            dce = np.zeros_like(table.data) if table.grad is None else table.grad
            if self.mix == "softmax" or (cfg.w01 == 0 and cfg.w_abl == 0):
                grad = dce
            else:
                # per-group loss on a detached copy of ce; chain back through it
                ce_leaf = Tensor(ce.data, requires_grad=True)
                a_leaf = Tensor(table.data, requires_grad=True)
                mc = None if ablated is None else ce_leaf - Tensor(ablated)
                loss = total_loss(ce_leaf, a_leaf, mc, self.alpha.share_groups[g], cfg)
                loss.backward()
                grad = float(ce_leaf.grad) * dce
                if a_leaf.grad is not None:
                    grad = grad + a_leaf.grad
            self.a_opts[g].step([grad])
            if not np.all(np.isfinite(table.data)):
                raise SearchDivergence(f"epoch {self.epoch}: non-finite logits in group {g}")
        for t in self.alpha.tables:
            t.grad = None
        return {"ce": ce.item(), "mean_mc": mean_mc}

    def weight_step(self, x, y, lr: float | None = None) -> float:
        self.net.set_norm_mode("train")
        self.net.zero_grad()
        if lr is not None:
            self.w_opt.lr = lr
        with _frozen(self.alpha.tables):
            loss = F.cross_entropy(self.logits(x), y)
        self._check(loss.item(), "training loss")
        loss.backward()
        if self.cfg.grad_clip > 0:
            clip_grad_norm(self.weights, self.cfg.grad_clip)
        self.w_opt.step()
        self.net.zero_grad()
        return loss.item()

    def evaluate(self, ds: ImageDataset, batch_size: int = 64) -> tuple[float, float]:
        """Mean cross-entropy and top-1 accuracy of the supernet.

        Uses batch statistics: after a handful of steps the running
        statistics of a freshly initialized supernet are still far off.
        """
        return evaluate(self.net, ds, self.cell_weights, batch_size, norm="frozen")

    def parse(self) -> Genotype:
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return parse_alpha(self.alpha, self.cfg.parse_method, self.cfg.threshold)

    def distance(self) -> float:
        return metric_M(self.start, parse_alpha(self.alpha, "edge", self.cfg.threshold),
                        self.metric_w)

    def _check(self, value: float, what: str) -> None:
        if not np.isfinite(value):
            raise SearchDivergence(f"epoch {self.epoch}: non-finite {what} ({value})")

    def digest(self) -> str:
        """SHA-256 over weights, running statistics, logits and optimizer state."""
        h = hashlib.sha256()
        arrays = [p.data for p in self.weights] + self.net.buffers()
        arrays += [t.data for t in self.alpha.tables] + self.w_opt.state()
        for opt in self.a_opts:
            arrays += opt.state()
        for a in arrays:
            h.update(np.ascontiguousarray(a, dtype=np.float64).tobytes())
        return h.hexdigest()


class _frozen:
    """Temporarily stop gradient recording into the given tensors."""

    def __init__(self, tensors):
        self.tensors = tensors

    def __enter__(self):
        for t in self.tensors:
            t.requires_grad = False

    def __exit__(self, *exc):
        for t in self.tensors:
            t.requires_grad = True


def evaluate(net: Network, ds: ImageDataset, weights_fn=None, batch_size: int = 64,
             norm: str = "eval"):
    net.set_norm_mode(norm)
    total, correct = 0.0, 0
    with no_grad():
        weights = None if weights_fn is None else weights_fn()
        for x, y in ds.batches(batch_size):
            out = net(x, weights)
            total += F.cross_entropy(out, y).item() * len(y)
            correct += int((out.data.argmax(axis=1) == y).sum())
    n = len(ds)
    return total / n, correct / n


@dataclass
class SearchResult:
    genotype: Genotype
    trace: DistanceTrace
    log: list = field(default_factory=list)
    state: SearchState | None = None
    stopped_epoch: int | None = None


def search(start: Genotype | None, dataset: ImageDataset, cfg: SearchConfig | None = None,
           epochs: int | None = None, mode: str | None = None, callback=None) -> SearchResult:
    """Run a search and return the parsed genotype, distance trace and metrics log.

    ``epochs`` counts search epochs; in dartopti mode the pretraining epochs
    come on top and share the same epoch numbering.
    """
    cfg = SearchConfig() if cfg is None else cfg
    if epochs is not None or mode is not None:
        cfg = cfg.replace(**{k: v for k, v in (("epochs", epochs), ("mode", mode))
                             if v is not None})
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    state = SearchState.create(cfg, dataset, start)
    pretrain = cfg.pretrain_epochs if cfg.mode == "dartopti" else 0
    total = pretrain + cfg.epochs
    log, stopped = [], None
    for epoch in range(total):
        state.epoch = epoch
        t0 = time.perf_counter()
        lr = cosine_lr(cfg.weight_lr, epoch, total, cfg.weight_lr_min)
        val_batches = list(state.val.batches(cfg.batch_size, state.order_rng))
        train_losses, mcs = [], []
        for (xt, yt), (xv, yv) in zip(state.train.batches(cfg.batch_size, state.order_rng),
                                      itertools.cycle(val_batches)):
            if epoch >= pretrain:
                info = state.alpha_step(xv, yv)
                if info["mean_mc"] is not None:
                    mcs.append(info["mean_mc"])
            train_losses.append(state.weight_step(xt, yt, lr))
        val_loss, top1 = state.evaluate(state.val)
        state._check(val_loss, "validation loss")
        dist = state.distance()
        state.trace.append(epoch, dist)
        with no_grad():
            l01 = zero_one_loss(state.alpha).item()
        log.append({
            "epoch": epoch,
            "train_loss": float(np.mean(train_losses)),
            "val_loss": val_loss,
            "val_top1": top1,
            "l01": l01,
            "mean_mc": float(np.mean(mcs)) if mcs else None,
            "distance_du": dist,
            "epoch_seconds": time.perf_counter() - t0 if cfg.timing else None,
        })
        if callback is not None:
            callback(state, log[-1])
        if cfg.mode == "dartopti" and cfg.early_stop:
            hit, e = plateau_stop(state.trace, cfg.plateau_window, cfg.plateau_start,
                                  cfg.plateau_tolerance)
            if hit:
                stopped = e
                break
    return SearchResult(state.parse(), state.trace, log, state, stopped)


def metrics_csv(log: list) -> str:
    lines = [",".join(METRIC_COLUMNS)]
    for row in log:
        cells = []
        for c in METRIC_COLUMNS:
            v = row.get(c)
            cells.append("" if v is None else (str(v) if isinstance(v, int) else repr(float(v))))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def train_discrete(genotype: Genotype, train: ImageDataset, val: ImageDataset,
                   epochs: int = 10, channels: int = 4, batch_size: int = 32,
                   lr: float = 0.025, lr_min: float = 1e-3, momentum: float = 0.9,
                   weight_decay: float = 3e-4, grad_clip: float = 5.0, seed: int = 0):
    """Train the network a genotype describes from scratch.

    Returns ``(network, history)`` where ``history`` holds one
    ``(train_loss, val_loss, val_top1)`` tuple per epoch.
    """
    init = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    order = np.random.default_rng(np.random.SeedSequence([seed, 4]))
    net = discrete_network(init, genotype, channels, train.n_classes, train.shape[0])
    params = net.parameters()
    opt = SGD(params, lr, momentum, weight_decay)
    history = []
    for epoch in range(epochs):
        opt.lr = cosine_lr(lr, epoch, epochs, lr_min)
        net.set_norm_mode("train")
        losses = []
        for x, y in train.batches(batch_size, order):
            net.zero_grad()
            loss = F.cross_entropy(net(x), y)
            if not np.isfinite(loss.item()):
                raise SearchDivergence(f"retraining epoch {epoch}: non-finite loss")
            loss.backward()
            if grad_clip > 0:
                clip_grad_norm(params, grad_clip)
            opt.step()
            losses.append(loss.item())
        vl, acc = evaluate(net, val, None, batch_size)
        history.append((float(np.mean(losses)), vl, acc))
    return net, history
