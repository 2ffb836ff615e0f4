"""Greedy search for a low-codelength partition.

Each restart alternates two phases until neither improves the codelength:

1. node moves -- visit nodes in a seeded random order and move each to the
   neighbouring module with the largest codelength decrease (ties to the
   smallest module id), sweeping until a full pass moves nothing;
2. contraction -- collapse modules into super-nodes carrying their summed
   visit rate and inter-module flow, run node moves on that coarser system,
   and repeat while anything moves.

The first phase starts from singletons and later rounds start from the
current partition, so phase 1 also fine-tunes what phase 2 merged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .kernels import plogp
from .mapeq_flow import CodelengthReport, FlowSystem, Partition, codelength


@dataclass(frozen=True)
class SearchConfig:
    seed: int = 42
    n_restarts: int = 10
    max_outer_passes: int = 100
    min_gain_bits: float = 1e-10

    def __post_init__(self):
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be >= 1")
        if self.min_gain_bits < 0:
            raise ValueError("min_gain_bits must be >= 0")
        if self.max_outer_passes < 1:
            raise ValueError("max_outer_passes must be >= 1")


@dataclass(frozen=True)
class SearchResult:
    best: Partition
    report: CodelengthReport
    trace: tuple[float, ...]
    restart_index: int


class _Level:
    """Compact flow graph over (super-)nodes, self-loops dropped."""

    def __init__(self, node_flow, src, dst, w):
        n = node_flow.shape[0]
        keep = src != dst
        g = sp.coo_matrix((w[keep], (src[keep], dst[keep])), shape=(n, n)).tocsr()
        g.sum_duplicates()
        g.sort_indices()
        gt = g.T.tocsr()
        gt.sort_indices()
        self.n = n
        self.node_flow = np.ascontiguousarray(node_flow, dtype=np.float64)
        self.out_ptr = g.indptr.astype(np.int64)
        self.out_idx = g.indices.astype(np.int64)
        self.out_w = g.data.astype(np.float64)
        self.in_ptr = gt.indptr.astype(np.int64)
        self.in_idx = gt.indices.astype(np.int64)
        self.in_w = gt.data.astype(np.float64)
        self.node_exit = np.asarray(g.sum(axis=1)).ravel()
        coo = g.tocoo()
        self.src, self.dst, self.w = coo.row.astype(np.int64), coo.col.astype(np.int64), coo.data

    def contract(self, module: np.ndarray) -> "_Level":
        m = int(module.max()) + 1
        flow = np.bincount(module, weights=self.node_flow, minlength=m)
        return _Level(flow, module[self.src], module[self.dst], self.w)

    def module_stats(self, module: np.ndarray, size: int):
        cross = module[self.src] != module[self.dst]
        exit_ = np.bincount(module[self.src][cross], weights=self.w[cross], minlength=size)
        flow = np.bincount(module, weights=self.node_flow, minlength=size)
        count = np.bincount(module, minlength=size).astype(np.int64)
        return exit_, flow, count


def _relabel(module: np.ndarray) -> np.ndarray:
    _, first, inv = np.unique(module, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inv]


def _codelength(exit_, flow, node_term) -> float:
    q = exit_.sum()
    return float(plogp(q) - 2.0 * plogp(exit_).sum() + plogp(exit_ + flow).sum() - node_term)


def _local_moves(level: _Level, module: np.ndarray, rng: np.random.Generator, min_gain: float) -> int:
    """Sweep node moves until a full pass accepts none; ``module`` is updated in place."""
    exit_, flow, count = level.module_stats(module, level.n)
    total = np.array([exit_.sum()])
    moves = 0
    while True:
        order = rng.permutation(level.n).astype(np.int64)
        k = kernels.move_sweep(order, level.node_flow, level.node_exit,
                               level.out_ptr, level.out_idx, level.out_w,
                               level.in_ptr, level.in_idx, level.in_w,
                               module, exit_, flow, count, total, min_gain)
        moves += k
        if k == 0:
            return moves


def _run_restart(level0: _Level, node_term: float, config: SearchConfig, rng) -> tuple[np.ndarray, list[float]]:
    module = np.arange(level0.n, dtype=np.int64)

    def current():
        exit_, flow, _ = level0.module_stats(module, level0.n)
        return _codelength(exit_, flow, node_term)

    trace = [current()]
    for _ in range(config.max_outer_passes):
        improved = _local_moves(level0, module, rng, config.min_gain_bits) > 0
        module[:] = _relabel(module)
        while True:
            coarse = level0.contract(module)
            sub = np.arange(coarse.n, dtype=np.int64)
            if _local_moves(coarse, sub, rng, config.min_gain_bits) == 0:
                break
            module[:] = _relabel(sub[module])
            improved = True
        trace.append(current())
        if not improved:
            break
    return module, trace


def optimize(fs: FlowSystem, config: SearchConfig = SearchConfig()) -> SearchResult:
    """Best partition over ``config.n_restarts`` seeded greedy searches.

    The winner has the lowest codelength; ties go to the earlier restart.
    The same ``fs`` and ``config`` always give the same result.
    """
    act = fs.active_nodes
    pos = np.full(fs.n_flow, -1, dtype=np.int64)
    pos[act] = np.arange(act.size)
    level0 = _Level(fs.visit[act], pos[fs.src], pos[fs.dst], fs.flow)
    node_term = float(plogp(fs.visit[act]).sum())

    best = None
    for r in range(config.n_restarts):
        rng = np.random.default_rng([config.seed, r])
        module, trace = _run_restart(level0, node_term, config, rng)
        if best is None or trace[-1] < best[1][-1]:
            best = (module.copy(), trace, r)
    module, trace, r = best
    labels = np.full(fs.n_flow, -1, dtype=np.int64)
    labels[act] = module
    part = Partition(fs, labels)
    return SearchResult(part, codelength(fs, part), tuple(trace), r)
