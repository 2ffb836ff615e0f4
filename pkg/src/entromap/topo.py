"""Topological indicators of a stock network.

Distances, diameter and closeness use directed hop counts (with in/out
variants where they differ); betweenness and clustering use the undirected
simplification, an edge wherever either direction exists.  Unreachable
pairs are left out of averages and maxima.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from . import kernels
from .lasso_net import DirectedAdjacency

MODES = ("directed", "undirected")

# column headers of the indicator CSV, in table order
INDICATOR_LABELS = {
    "diameter": "Network diameter",
    "density": "Network density",
    "avg_shortest_path": "The average shortest path length",
    "clustering": "Clustering coefficient",
    "mean_rel_degree": "Mean of relative degree centrality",
    "mean_rel_betweenness": "Mean of relative betweenness centrality",
    "mean_rel_closeness": "Mean of relative closeness centrality",
    "out_degree_centralisation": "Out-degree centralisation",
    "in_degree_centralisation": "In-degree centralisation",
    "betweenness_centralisation": "Betweenness centralisation",
    "out_closeness_centralisation": "Out-degree closeness centralisation",
    "in_closeness_centralisation": "In-degree closeness centralisation",
}


def _matrix(adj) -> np.ndarray:
    if isinstance(adj, DirectedAdjacency):
        a = adj.to_matrix()
    else:
        a = np.asarray(adj)
    a = a != 0
    np.fill_diagonal(a, False)
    return a


def _csr(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = np.nonzero(a)
    indptr = np.searchsorted(rows, np.arange(a.shape[0] + 1)).astype(np.int64)
    return indptr, cols.astype(np.int64)


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")


def undirected(adj) -> np.ndarray:
    a = _matrix(adj)
    return a | a.T


def distance_matrix(adj, mode: str = "directed") -> np.ndarray:
    """Hop distances ``d[i, j]`` from ``i`` to ``j``; -1 where unreachable."""
    _check_mode(mode)
    a = _matrix(adj) if mode == "directed" else undirected(adj)
    indptr, indices = _csr(a)
    return kernels.bfs_distances(indptr, indices, a.shape[0])


@dataclass(frozen=True)
class PathStats:
    avg: float
    diameter: int
    distances: np.ndarray
    reachable_pairs: int


def shortest_path_stats(adj, mode: str = "directed") -> PathStats:
    d = distance_matrix(adj, mode)
    off = ~np.eye(d.shape[0], dtype=bool)
    reach = d[(d > 0) & off]
    if reach.size == 0:
        return PathStats(0.0, 0, d, 0)
    return PathStats(float(reach.mean()), int(reach.max()), d, int(reach.size))


def clustering_coefficient(adj) -> tuple[np.ndarray, float]:
    """Per-node clustering on the undirected simplification, and its mean."""
    u = undirected(adj).astype(np.int64)
    k = u.sum(axis=1)
    links = ((u @ u) * u).sum(axis=1) // 2  # edges among each node's neighbours
    denom = k * (k - 1)
    c = np.zeros(u.shape[0])
    ok = k >= 2
    c[ok] = 2.0 * links[ok] / denom[ok]
    return c, float(c.mean()) if c.size else 0.0


def density(adj) -> float:
    a = _matrix(adj)
    n = a.shape[0]
    if n < 2:
        raise ValueError("density needs at least 2 nodes")
    return float(a.sum() / (n * (n - 1)))


def _closeness(d: np.ndarray) -> np.ndarray:
    """Closeness from row-wise distances, scaled by the reachable fraction."""
    n = d.shape[0]
    pos = d > 0
    r = pos.sum(axis=1)
    s = np.where(pos, d, 0).sum(axis=1)
    out = np.zeros(n)
    ok = s > 0
    out[ok] = (r[ok] / s[ok]) * (r[ok] / (n - 1))
    return out


def relative_betweenness(adj) -> np.ndarray:
    """Betweenness over unordered pairs, normalised by ``(N-1)(N-2)/2``."""
    u = undirected(adj)
    n = u.shape[0]
    if n < 3:
        raise ValueError("betweenness needs at least 3 nodes")
    indptr, indices = _csr(u)
    raw = kernels.brandes(indptr, indices, n)  # ordered pairs: each unordered pair twice
    return raw / ((n - 1) * (n - 2))


@dataclass(frozen=True)
class Centralities:
    degree_out: np.ndarray
    degree_in: np.ndarray
    betweenness: np.ndarray
    closeness_out: np.ndarray
    closeness_in: np.ndarray

    @property
    def degree(self) -> np.ndarray:
        return 0.5 * (self.degree_out + self.degree_in)

    @property
    def closeness(self) -> np.ndarray:
        return 0.5 * (self.closeness_out + self.closeness_in)


def centralities(adj, mode: str = "directed") -> Centralities:
    _check_mode(mode)
    a = _matrix(adj) if mode == "directed" else undirected(adj)
    n = a.shape[0]
    if n < 2:
        raise ValueError("centralities need at least 2 nodes")
    d = distance_matrix(a, "directed")
    return Centralities(
        degree_out=a.sum(axis=1) / (n - 1),
        degree_in=a.sum(axis=0) / (n - 1),
        betweenness=relative_betweenness(a),
        closeness_out=_closeness(d),
        closeness_in=_closeness(d.T),
    )


def degree_centralisation(values: np.ndarray) -> float:
    n = values.size
    if n < 3:
        raise ValueError("degree centralisation needs at least 3 nodes")
    return float((values.max() - values).sum() / (n - 2))


def betweenness_centralisation(values: np.ndarray) -> float:
    n = values.size
    if n < 2:
        raise ValueError("betweenness centralisation needs at least 2 nodes")
    return float((values.max() - values).sum() / (n - 1))


def closeness_centralisation(values: np.ndarray) -> float:
    n = values.size
    if n < 3:
        raise ValueError("closeness centralisation needs at least 3 nodes")
    return float(2.0 * (n - 3) / ((n - 1) * (n - 2)) * (values.max() - values).sum())


def centralisations(c: Centralities) -> dict[str, float]:
    return {
        "out_degree_centralisation": degree_centralisation(c.degree_out),
        "in_degree_centralisation": degree_centralisation(c.degree_in),
        "betweenness_centralisation": betweenness_centralisation(c.betweenness),
        "out_closeness_centralisation": closeness_centralisation(c.closeness_out),
        "in_closeness_centralisation": closeness_centralisation(c.closeness_in),
    }


@dataclass(frozen=True)
class IndicatorTable:
    diameter: int
    density: float
    avg_shortest_path: float
    clustering: float
    mean_rel_degree: float
    mean_rel_betweenness: float
    mean_rel_closeness: float
    out_degree_centralisation: float
    in_degree_centralisation: float
    betweenness_centralisation: float
    out_closeness_centralisation: float
    in_closeness_centralisation: float

    def as_row(self) -> dict[str, float]:
        return {INDICATOR_LABELS[f.name]: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_row(cls, row: dict[str, str]) -> "IndicatorTable":
        values = {}
        for f in fields(cls):
            text = row[INDICATOR_LABELS[f.name]]
            values[f.name] = int(text) if f.name == "diameter" else float(text)
        return cls(**values)


def indicator_table(adj, cent: Centralities | None = None) -> IndicatorTable:
    a = _matrix(adj)
    if not a.any():
        raise ValueError("indicator table needs at least one edge")
    paths = shortest_path_stats(a, "directed")
    cent = centralities(a, "directed") if cent is None else cent
    return IndicatorTable(
        diameter=paths.diameter,
        density=density(a),
        avg_shortest_path=paths.avg,
        clustering=clustering_coefficient(a)[1],
        mean_rel_degree=float(cent.degree.mean()),
        mean_rel_betweenness=float(cent.betweenness.mean()),
        mean_rel_closeness=float(cent.closeness.mean()),
        **centralisations(cent),
    )
