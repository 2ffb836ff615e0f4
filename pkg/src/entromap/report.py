"""Stock-level views of a flow partition: module tables, industry cross-tabs, rankings."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .lasso_net import DirectedAdjacency
from .mapeq_flow import FlowSystem, Partition
from .topo import Centralities

log = logging.getLogger(__name__)

ISOLATED = -1
UNKNOWN_INDUSTRY = "unknown"


def collapse_partition(fs: FlowSystem, partition: Partition) -> np.ndarray:
    """Module id per stock from its out-role and in-role nodes.

    Agreeing roles give their module; otherwise the role with the larger
    visit rate wins, the out-role on ties.  Stocks with both roles inactive
    get :data:`ISOLATED`.
    """
    n = fs.n_stocks
    out_mod = partition.labels[:n]
    in_mod = partition.labels[n:]
    out_p = fs.visit[:n]
    in_p = fs.visit[n:]
    pick_in = (out_mod < 0) | ((in_mod >= 0) & (in_mod != out_mod) & (in_p > out_p))
    return np.where(pick_in, in_mod, out_mod).astype(np.int64)


@dataclass(frozen=True)
class FlowShares:
    """Per flow-module fractions of the total flow (which sums to 1)."""

    within: np.ndarray
    flow_in: np.ndarray
    flow_out: np.ndarray


def flow_shares(fs: FlowSystem, partition: Partition) -> FlowShares:
    lab = partition.labels
    ls, ld = lab[fs.src], lab[fs.dst]
    m = partition.m
    same = ls == ld
    within = np.bincount(ls[same], weights=fs.flow[same], minlength=m)
    flow_in = np.bincount(ld[~same], weights=fs.flow[~same], minlength=m)
    flow_out = np.bincount(ls[~same], weights=fs.flow[~same], minlength=m)
    return FlowShares(within, flow_in, flow_out)


def module_order(shares: FlowShares) -> list[int]:
    """Flow-module ids ranked by within-module flow, descending; ties by id."""
    return sorted(range(shares.within.size), key=lambda a: (-shares.within[a], a))


def module_flows_between(fs: FlowSystem, partition: Partition) -> np.ndarray:
    """``F[a, b]`` = flow from module ``a`` to module ``b`` (diagonal = within)."""
    m = partition.m
    F = np.zeros((m, m))
    np.add.at(F, (partition.labels[fs.src], partition.labels[fs.dst]), fs.flow)
    return F


@dataclass(frozen=True)
class ModuleRow:
    name: str
    node_count: int
    link_count: int
    within_pct: float
    flow_in_pct: float
    flow_out_pct: float


@dataclass(frozen=True)
class StockModuleTable:
    rows: tuple[ModuleRow, ...]
    isolated_count: int = 0

    def top(self, k: int) -> tuple[ModuleRow, ...]:
        return self.rows[:k]

    @property
    def node_total(self) -> int:
        return sum(r.node_count for r in self.rows) + self.isolated_count


def _pct(x: float) -> float:
    return round(100.0 * float(x), 2)


def stock_module_table(fs: FlowSystem, partition: Partition, adj: DirectedAdjacency,
                       stock_module: np.ndarray | None = None) -> StockModuleTable:
    """Node and link counts per module plus its flow shares in percent.

    Link counts are directed stock-level edges with both ends in the module.
    Percentages carry two decimals.
    """
    if stock_module is None:
        stock_module = collapse_partition(fs, partition)
    shares = flow_shares(fs, partition)
    counts = np.bincount(stock_module[stock_module >= 0], minlength=partition.m)
    links = np.zeros(partition.m, dtype=np.int64)
    for i, j in adj.entries:
        a = stock_module[i]
        if a >= 0 and a == stock_module[j]:
            links[a] += 1
    rows = []
    for rank, a in enumerate(module_order(shares), start=1):
        rows.append(ModuleRow(f"M{rank}", int(counts[a]), int(links[a]), _pct(shares.within[a]),
                              _pct(shares.flow_in[a]), _pct(shares.flow_out[a])))
    return StockModuleTable(tuple(rows), int((stock_module == ISOLATED).sum()))


@dataclass(frozen=True)
class IndustryCrossTab:
    industries: tuple[str, ...]
    modules: tuple[str, ...]
    counts: np.ndarray  # (len(industries), len(modules))


def cross_tab(stock_module: np.ndarray, tickers: Sequence[str], industries: Mapping[str, str],
              order: Sequence[int], top_k: int = 9) -> IndustryCrossTab:
    """Stock counts per (industry, module) over the ``top_k`` highest-flow modules.

    ``order`` ranks flow-module ids (see :func:`module_order`); column ``k``
    is named ``M{k+1}``.  Stocks without an industry fall in an ``unknown``
    row.  ``top_k`` beyond the module count is clamped with a warning.
    """
    if top_k > len(order):
        warnings.warn(f"top_k={top_k} exceeds {len(order)} modules; clamping", stacklevel=2)
        top_k = len(order)
    cols = list(order[:top_k])
    col_of = {a: k for k, a in enumerate(cols)}
    labels = [industries.get(t, UNKNOWN_INDUSTRY) for t in tickers]
    known = sorted({lab for lab in labels if lab != UNKNOWN_INDUSTRY})
    rows = known + ([UNKNOWN_INDUSTRY] if UNKNOWN_INDUSTRY in labels else [])
    row_of = {r: k for k, r in enumerate(rows)}
    counts = np.zeros((len(rows), len(cols)), dtype=np.int64)
    for t, lab, a in zip(tickers, labels, stock_module.tolist()):
        if a in col_of:
            counts[row_of[lab], col_of[a]] += 1
    return IndustryCrossTab(tuple(rows), tuple(f"M{k + 1}" for k in range(len(cols))), counts)


@dataclass(frozen=True)
class RankEntry:
    ticker: str
    industry: str
    value: float


def centrality_ranking(cent: Centralities, tickers: Sequence[str], industries: Mapping[str, str],
                       stock_module: np.ndarray, top_k: int = 5) -> dict[str, tuple[RankEntry, ...]]:
    """Top-``k`` stocks per centrality kind; ties by ticker; isolated stocks skipped."""
    kinds = {"degree": cent.degree, "betweenness": cent.betweenness, "closeness": cent.closeness}
    out = {}
    eligible = [k for k in range(len(tickers)) if stock_module[k] != ISOLATED]
    for kind, values in kinds.items():
        ranked = sorted(eligible, key=lambda k: (-values[k], tickers[k]))[:top_k]
        out[kind] = tuple(RankEntry(tickers[k], industries.get(tickers[k], UNKNOWN_INDUSTRY), float(values[k]))
                          for k in ranked)
    return out


@dataclass(frozen=True)
class ModuleGraph:
    """Module-level flow graph for drawing: node size = usage rate, edge weight = flow."""

    names: tuple[str, ...]
    usage: tuple[float, ...]
    exit_freq: tuple[float, ...]
    edges: tuple[tuple[str, str, float], ...]


def module_graph(fs: FlowSystem, partition: Partition, order: Sequence[int]) -> ModuleGraph:
    F = module_flows_between(fs, partition)
    names = [f"M{k + 1}" for k in range(len(order))]
    edges = []
    for ka, a in enumerate(order):
        for kb, b in enumerate(order):
            if a != b and F[a, b] > 0:
                edges.append((names[ka], names[kb], float(F[a, b])))
    return ModuleGraph(tuple(names), tuple(float(partition.usage[a]) for a in order),
                       tuple(float(partition.exit_flow[a]) for a in order), tuple(edges))
