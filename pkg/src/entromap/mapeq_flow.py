"""Bipartite random-walk flow system and the two-level map-equation codelength.

A directed adjacency ``A`` on ``N`` stocks becomes a ``2N``-node system: node
``i`` is stock ``i``'s out-role, node ``N + i`` its in-role, and the
symmetric block matrix ``[[0, A], [A^T, 0]]`` is column-normalised into a
transition matrix.  Nodes with no links are inactive and carry no flow.

All logarithms are base 2, so codelengths are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .kernels import plogp
from .lasso_net import DirectedAdjacency

POWER_TOL = 1e-12
POWER_MAX_ITER = 100_000


class FlowError(ValueError):
    pass


def entropy(p) -> float:
    """Shannon entropy in bits, ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < 0):
        raise ValueError("negative probability")
    return float(-plogp(p).sum())


def stationary_distribution(P: sp.spmatrix, active: np.ndarray, tol: float = POWER_TOL,
                            max_iter: int = POWER_MAX_ITER) -> np.ndarray:
    """Fixed point of a column-stochastic ``P`` by power iteration.

    Iterates ``x <- (P x + P^2 x) / 2`` so 2-periodic chains (every bipartite
    walk) still converge; stops once ``max|P x - x| <= tol``.  Starts uniform
    over ``active``.
    """
    n = P.shape[0]
    x = np.zeros(n)
    x[active] = 1.0 / active.sum()
    for _ in range(max_iter):
        px = P @ x
        if np.max(np.abs(px - x)) <= tol:
            return x
        x = 0.5 * (px + P @ px)
        x /= x.sum()
    px = P @ x
    if np.max(np.abs(px - x)) <= tol:
        return x
    raise FlowError(f"power iteration did not reach residual {tol} in {max_iter} iterations")


@dataclass(frozen=True, eq=False)
class FlowSystem:
    n_stocks: int
    transition: sp.csc_matrix  # column j = distribution of the next step from j
    visit: np.ndarray
    active: np.ndarray
    # edge list of flow p_src * pi[dst, src], used by partition statistics
    src: np.ndarray = field(repr=False)
    dst: np.ndarray = field(repr=False)
    flow: np.ndarray = field(repr=False)

    @property
    def n_flow(self) -> int:
        return self.visit.shape[0]

    @property
    def active_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.active)

    def node_name(self, k: int) -> str:
        return f"{k % self.n_stocks}:{'out' if k < self.n_stocks else 'in'}"

    def out_flow(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR arrays (indptr, dst, flow) of outgoing flow per node."""
        order = np.lexsort((self.dst, self.src))
        indptr = np.searchsorted(self.src[order], np.arange(self.n_flow + 1))
        return indptr, self.dst[order], self.flow[order]

    def in_flow(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        order = np.lexsort((self.src, self.dst))
        indptr = np.searchsorted(self.dst[order], np.arange(self.n_flow + 1))
        return indptr, self.src[order], self.flow[order]


def flow_system_from_matrix(V: np.ndarray | sp.spmatrix, n_stocks: int | None = None) -> FlowSystem:
    """Build a flow system from any non-negative square ``V`` (column-normalised).

    Used directly by tests; :func:`build_flow_system` passes the bipartite
    block matrix.
    """
    V = sp.csc_matrix(V, dtype=np.float64)
    V.eliminate_zeros()
    n = V.shape[0]
    colsum = np.asarray(V.sum(axis=0)).ravel()
    active = colsum > 0
    if not active.any():
        raise FlowError("flow system has no links")
    scale = np.where(active, 1.0 / np.where(active, colsum, 1.0), 0.0)
    P = sp.csc_matrix(V @ sp.diags(scale))
    P.sort_indices()
    visit = stationary_distribution(P, active)
    coo = P.tocoo()
    # coo.row = destination, coo.col = source
    src = coo.col.astype(np.int64)
    dst = coo.row.astype(np.int64)
    flow = coo.data * visit[src]
    order = np.lexsort((dst, src))
    return FlowSystem(n // 2 if n_stocks is None else n_stocks, P, visit, active,
                      src[order], dst[order], flow[order])


def build_flow_system(adj: DirectedAdjacency) -> FlowSystem:
    if len(adj) == 0:
        raise FlowError("adjacency has no edges")
    A = sp.csr_matrix(adj.to_matrix().astype(np.float64))
    V = sp.bmat([[None, A], [A.T, None]], format="csc")
    return flow_system_from_matrix(V, adj.n)


# ---------------------------------------------------------------------------
# partitions
# ---------------------------------------------------------------------------


def _relabel(labels: np.ndarray) -> np.ndarray:
    """Map module ids onto 0..m-1 in order of first appearance; -1 stays -1."""
    out = np.full(labels.shape, -1, dtype=np.int64)
    seen: dict[int, int] = {}
    for k, lab in enumerate(labels.tolist()):
        if lab < 0:
            continue
        if lab not in seen:
            seen[lab] = len(seen)
        out[k] = seen[lab]
    return out


def module_flow_stats(fs: FlowSystem, assignment) -> tuple[np.ndarray, np.ndarray, float]:
    """Per-module exit flow, per-module usage flow and total exit flow.

    ``assignment`` gives a module id (0..m-1) per flow node; inactive nodes
    may carry -1.  Exit flow of module ``a`` is the visit mass of its nodes
    times their transition probability to nodes outside ``a``.
    """
    labels = np.asarray(assignment, dtype=np.int64)
    act = fs.active
    if labels.shape != (fs.n_flow,):
        raise FlowError(f"assignment must have length {fs.n_flow}")
    if np.any(labels[act] < 0):
        raise FlowError("active node assigned to no module")
    m = int(labels[act].max()) + 1
    ls, ld = labels[fs.src], labels[fs.dst]
    cross = ls != ld
    exit_ = np.bincount(ls[cross], weights=fs.flow[cross], minlength=m)
    internal = np.bincount(labels[act], weights=fs.visit[act], minlength=m)
    return exit_, exit_ + internal, float(exit_.sum())


@dataclass(frozen=True)
class CodelengthReport:
    total: float
    index_term: float
    module_terms: np.ndarray


class Partition:
    """Module assignment over the active nodes of a flow system, with cached stats.

    Module ids are contiguous ``0..m-1``; inactive nodes hold ``-1``.  The
    cached ``exit_flow`` and ``node_flow`` (summed visit mass) are updated
    incrementally by :meth:`move`.
    """

    def __init__(self, fs: FlowSystem, assignment):
        labels = np.asarray(assignment, dtype=np.int64).copy()
        if labels.shape != (fs.n_flow,):
            raise FlowError(f"assignment must have length {fs.n_flow}")
        labels[~fs.active] = -1
        if np.any(labels[fs.active] < 0):
            raise FlowError("active node assigned to no module")
        self.fs = fs
        self.labels = _relabel(labels)
        self.m = int(self.labels.max()) + 1
        self.recompute()

    @classmethod
    def singletons(cls, fs: FlowSystem) -> "Partition":
        return cls(fs, np.arange(fs.n_flow))

    @classmethod
    def one_module(cls, fs: FlowSystem) -> "Partition":
        return cls(fs, np.zeros(fs.n_flow, dtype=np.int64))

    def recompute(self) -> None:
        self.exit_flow, usage, _ = module_flow_stats(self.fs, self.labels)
        self.node_flow = usage - self.exit_flow
        self.size = np.bincount(self.labels[self.fs.active], minlength=self.m)

    @property
    def usage(self) -> np.ndarray:
        return self.exit_flow + self.node_flow

    @property
    def total_exit(self) -> float:
        return float(self.exit_flow.sum())

    def members(self, module: int) -> np.ndarray:
        return np.flatnonzero(self.labels == module)

    def copy(self) -> "Partition":
        return Partition(self.fs, self.labels)

    def _neighbour_flow(self, node: int, module: int) -> tuple[float, float]:
        fs = self.fs
        lab = self.labels
        out = (fs.src == node) & (fs.dst != node) & (lab[fs.dst] == module)
        inn = (fs.dst == node) & (fs.src != node) & (lab[fs.src] == module)
        return float(fs.flow[out].sum()), float(fs.flow[inn].sum())

    def _move_terms(self, node: int, target: int | None):
        fs = self.fs
        if not fs.active[node]:
            raise FlowError(f"node {node} is inactive")
        a = int(self.labels[node])
        p_u = float(fs.visit[node])
        exit_u = float(fs.flow[(fs.src == node) & (fs.dst != node)].sum())
        fout_a, fin_a = self._neighbour_flow(node, a)
        if target is None:
            qb = pb = fout_b = fin_b = 0.0
        else:
            qb, pb = float(self.exit_flow[target]), float(self.node_flow[target])
            fout_b, fin_b = self._neighbour_flow(node, target)
        return a, p_u, exit_u, fout_a, fin_a, qb, pb, fout_b, fin_b

    def delta(self, node: int, target: int | None) -> float:
        """Codelength change in bits if ``node`` moved to ``target`` (None = new module)."""
        if target is not None and target == self.labels[node]:
            return 0.0
        a, p_u, exit_u, fout_a, fin_a, qb, pb, fout_b, fin_b = self._move_terms(node, target)
        return kernels.move_delta(self.total_exit, float(self.exit_flow[a]), float(self.node_flow[a]),
                                  qb, pb, p_u, exit_u, fout_a, fin_a, fout_b, fin_b)

    def move(self, node: int, target: int | None) -> None:
        """Move ``node`` to module ``target`` (None = new module), keeping ids contiguous.

        If the source module empties, the highest-numbered module takes its id.
        """
        if target is not None and target == self.labels[node]:
            return
        a, p_u, exit_u, fout_a, fin_a, qb, pb, fout_b, fin_b = self._move_terms(node, target)
        if target is None:
            target = self.m
            self.m += 1
            self.exit_flow = np.append(self.exit_flow, 0.0)
            self.node_flow = np.append(self.node_flow, 0.0)
            self.size = np.append(self.size, 0)
        self.exit_flow[a] = self.exit_flow[a] - (exit_u - fout_a) + fin_a
        self.exit_flow[target] = qb + (exit_u - fout_b) - fin_b
        self.node_flow[a] -= p_u
        self.node_flow[target] += p_u
        self.size[a] -= 1
        self.size[target] += 1
        self.labels[node] = target
        if self.size[a] == 0:
            last = self.m - 1
            if a != last:
                self.labels[self.labels == last] = a
                for arr in (self.exit_flow, self.node_flow, self.size):
                    arr[a] = arr[last]
            self.m -= 1
            self.exit_flow = self.exit_flow[: self.m].copy()
            self.node_flow = self.node_flow[: self.m].copy()
            self.size = self.size[: self.m].copy()


def codelength(fs: FlowSystem, partition: Partition | np.ndarray) -> CodelengthReport:
    """Two-level map-equation codelength of ``partition`` in bits."""
    labels = partition.labels if isinstance(partition, Partition) else _relabel(np.asarray(partition))
    exit_, usage, q = module_flow_stats(fs, labels)
    act = fs.active
    index_term = float(plogp(q) - plogp(exit_).sum())  # q H(Q)
    # p_use H(P^a) = -q_a log(q_a/p_use) - sum p_i log(p_i/p_use)
    node_plogp = np.bincount(labels[act], weights=plogp(fs.visit[act]), minlength=exit_.size)
    module_terms = plogp(usage) - plogp(exit_) - node_plogp
    return CodelengthReport(float(index_term + module_terms.sum()), index_term, module_terms)


def delta_codelength(fs: FlowSystem, partition: Partition, node: int, target_module: int | None) -> float:
    if partition.fs is not fs:
        raise FlowError("partition belongs to a different flow system")
    return partition.delta(node, target_module)


def codelength_many(fs: FlowSystem, assignments: np.ndarray) -> np.ndarray:
    """Codelengths for a batch of partitions of the *active* nodes.

    ``assignments`` has shape ``(K, n_active)`` with ids ``0..m-1`` in the
    order of :attr:`FlowSystem.active_nodes`.
    """
    act = fs.active_nodes
    pos = np.full(fs.n_flow, -1, dtype=np.int64)
    pos[act] = np.arange(act.size)
    labels = np.ascontiguousarray(assignments, dtype=np.int64)
    if labels.ndim != 2 or labels.shape[1] != act.size:
        raise FlowError(f"assignments must have shape (K, {act.size})")
    return kernels.codelength_many(labels, np.ascontiguousarray(fs.visit[act]),
                                   pos[fs.src], pos[fs.dst], np.ascontiguousarray(fs.flow))


def flow_to_json(fs: FlowSystem, partition: Partition, names: list[str] | None = None,
                 module_names: list[str] | None = None, order: list[int] | None = None) -> dict:
    """JSON-ready dict: nodes with visit rates, modules with members and flows."""
    names = names or [fs.node_name(k) for k in range(fs.n_flow)]
    order = list(range(partition.m)) if order is None else order
    module_names = module_names or [str(k + 1) for k in range(len(order))]
    report = codelength(fs, partition)
    modules = []
    for name, a in zip(module_names, order):
        modules.append({
            "id": name,
            "members": [names[k] for k in partition.members(a).tolist()],
            "exit_freq": float(partition.exit_flow[a]),
            "usage_freq": float(partition.usage[a]),
        })
    return {
        "nodes": [{"id": names[k], "visit": float(fs.visit[k])} for k in range(fs.n_flow)],
        "modules": modules,
        "codelength_bits": report.total,
    }
