"""Independent brute-force oracles.

Nothing here imports from ``entromap`` internals; each oracle is a direct
transcription of the defining formula on dense matrices.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from numba import njit

# ---------------------------------------------------------------------------
# map equation
# ---------------------------------------------------------------------------


def dense_flow(V: np.ndarray, iters: int = 200_000, tol: float = 1e-14):
    """Column-normalised transition matrix and stationary vector by eigen-solve."""
    V = np.asarray(V, dtype=float)
    col = V.sum(axis=0)
    active = col > 0
    Pi = np.zeros_like(V)
    Pi[:, active] = V[:, active] / col[active]
    idx = np.flatnonzero(active)
    sub = Pi[np.ix_(idx, idx)]
    # null space of (sub - I), averaged over components via uniform projection
    x = np.full(idx.size, 1.0 / idx.size)
    for _ in range(iters):
        nxt = 0.5 * (sub @ x + sub @ (sub @ x))
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - x)) < tol:
            x = nxt
            break
        x = nxt
    p = np.zeros(V.shape[0])
    p[idx] = x
    return Pi, p, active


def _h(weights: np.ndarray) -> float:
    """Entropy in bits of the distribution proportional to ``weights``."""
    s = weights.sum()
    if s <= 0:
        return 0.0
    total = 0.0
    for w in weights:
        if w > 0:
            total -= (w / s) * math.log2(w / s)
    return total


def straight_line_codelength(Pi: np.ndarray, p: np.ndarray, labels) -> float:
    """Two-level codelength evaluated term by term over dense arrays.

    ``labels`` assigns a module to every node with ``p > 0`` or an active
    column; -1 marks excluded nodes.
    """
    labels = list(labels)
    mods = sorted({a for a in labels if a >= 0})
    n = len(labels)
    q_a = []
    for a in mods:
        q = 0.0
        for i in range(n):
            if labels[i] != a:
                continue
            for j in range(n):
                if labels[j] != a:
                    q += Pi[j, i] * p[i]
        q_a.append(q)
    q_a = np.array(q_a)
    q = q_a.sum()
    L = q * _h(q_a) if q > 0 else 0.0
    for k, a in enumerate(mods):
        members = [i for i in range(n) if labels[i] == a]
        usage = q_a[k] + sum(p[i] for i in members)
        if usage <= 0:
            continue
        L += usage * _h(np.array([q_a[k]] + [p[i] for i in members]))
    return float(L)


@njit(cache=True)
def _plogp(x):
    return x * np.log2(x) if x > 0.0 else 0.0


@njit(cache=True)
def _rgs_codelength(F, p, lab, m):
    """Codelength for one restricted-growth labelling; F[j, i] = flow i -> j."""
    n = p.shape[0]
    q_a = np.zeros(m)
    pin = np.zeros(m)
    for i in range(n):
        a = lab[i]
        pin[a] += p[i]
        for j in range(n):
            if lab[j] != a:
                q_a[a] += F[j, i]
    q = 0.0
    for a in range(m):
        q += q_a[a]
    L = 0.0
    if q > 0.0:
        for a in range(m):
            if q_a[a] > 0.0:
                L -= q_a[a] * np.log2(q_a[a] / q)
    for a in range(m):
        u = q_a[a] + pin[a]
        if u <= 0.0:
            continue
        if q_a[a] > 0.0:
            L -= q_a[a] * np.log2(q_a[a] / u)
        for i in range(n):
            if lab[i] == a and p[i] > 0.0:
                L -= p[i] * np.log2(p[i] / u)
    return L


@njit(cache=True)
def _enumerate(F, p, keep_all):
    n = p.shape[0]
    lab = np.zeros(n, dtype=np.int64)
    mx = np.zeros(n, dtype=np.int64)  # mx[k] = max label among lab[:k+1]
    best = np.inf
    best_lab = lab.copy()
    # Bell number upper bound for storage
    bell = np.zeros(n + 1, dtype=np.int64)
    bell[0] = 1
    row = np.zeros(n + 1, dtype=np.int64)
    row[0] = 1
    for k in range(1, n + 1):
        nxt = np.zeros(n + 1, dtype=np.int64)
        nxt[0] = row[k - 1]
        for t in range(1, k + 1):
            nxt[t] = nxt[t - 1] + row[t - 1]
        row = nxt
        bell[k] = row[0]
    size = bell[n] if keep_all else 1
    values = np.empty(size)
    labels = np.empty((size, n), dtype=np.int8) if keep_all else np.empty((1, n), dtype=np.int8)
    count = 0
    while True:
        m = mx[n - 1] + 1
        L = _rgs_codelength(F, p, lab, m)
        if keep_all:
            values[count] = L
            for i in range(n):
                labels[count, i] = lab[i]
        if L < best:
            best = L
            best_lab[:] = lab
        count += 1
        # next restricted growth string
        k = n - 1
        while k > 0 and lab[k] == mx[k - 1] + 1:
            k -= 1
        if k == 0:
            break
        lab[k] += 1
        mx[k] = max(mx[k - 1], lab[k])
        for t in range(k + 1, n):
            lab[t] = 0
            mx[t] = mx[k]
    if not keep_all:
        values[0] = best
        labels[0, :] = best_lab
    return values, labels, best, best_lab


def all_partitions(Pi: np.ndarray, p: np.ndarray, nodes: np.ndarray):
    """Every partition of ``nodes`` with its straight-line codelength."""
    F = (Pi * p[None, :])[np.ix_(nodes, nodes)]
    values, labels, _, _ = _enumerate(np.ascontiguousarray(F), np.ascontiguousarray(p[nodes]), True)
    return labels.astype(np.int64), values


def exhaustive_minimum(Pi: np.ndarray, p: np.ndarray, nodes: np.ndarray) -> tuple[float, np.ndarray]:
    F = (Pi * p[None, :])[np.ix_(nodes, nodes)]
    _, _, best, lab = _enumerate(np.ascontiguousarray(F), np.ascontiguousarray(p[nodes]), False)
    return float(best), lab


def bell(n: int) -> int:
    row = [1]
    for _ in range(n - 1):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[-1]


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------


def floyd_warshall(a: np.ndarray) -> np.ndarray:
    """All-pairs hop distances; inf where unreachable."""
    n = a.shape[0]
    d = np.full((n, n), np.inf)
    d[a.astype(bool)] = 1.0
    np.fill_diagonal(d, 0.0)
    for k in range(n):
        for i in range(n):
            dik = d[i, k]
            if dik == np.inf:
                continue
            for j in range(n):
                if dik + d[k, j] < d[i, j]:
                    d[i, j] = dik + d[k, j]
    return d


def triple_clustering(a: np.ndarray) -> np.ndarray:
    u = (a | a.T).astype(bool)
    np.fill_diagonal(u, False)
    n = u.shape[0]
    out = np.zeros(n)
    for i in range(n):
        nb = np.flatnonzero(u[i])
        k = nb.size
        if k < 2:
            continue
        closed = sum(1 for x, y in itertools.combinations(nb, 2) if u[x, y])
        out[i] = 2.0 * closed / (k * (k - 1))
    return out


def geodesic_betweenness(a: np.ndarray) -> np.ndarray:
    """Relative betweenness on the undirected simplification by counting every geodesic.

    Uses the identity that ``v`` lies on a geodesic s..t iff d(s,v)+d(v,t)=d(s,t),
    with path counts from Floyd–Warshall distances.
    """
    u = (a | a.T).astype(bool)
    np.fill_diagonal(u, False)
    n = u.shape[0]
    d = floyd_warshall(u)
    # sigma[s, t] = number of shortest paths, counted layer by layer
    sigma = np.zeros((n, n))
    for s in range(n):
        sigma[s, s] = 1.0
        order = np.argsort(d[s], kind="stable")
        for t in order:
            if t == s or d[s, t] == np.inf:
                continue
            sigma[s, t] = sum(sigma[s, w] for w in range(n) if u[w, t] and d[s, w] == d[s, t] - 1)
    g = np.zeros(n)
    for s, t in itertools.combinations(range(n), 2):
        if d[s, t] == np.inf:
            continue
        for v in range(n):
            if v in (s, t):
                continue
            if d[s, v] + d[v, t] == d[s, t]:
                g[v] += sigma[s, v] * sigma[v, t] / sigma[s, t]
    return 2.0 * g / ((n - 1) * (n - 2))


def closeness_from_distances(d: np.ndarray) -> np.ndarray:
    """Reachable-scaled closeness: (r/sum d) * (r/(N-1)) per row; inf = unreachable."""
    n = d.shape[0]
    out = np.zeros(n)
    for i in range(n):
        ds = [d[i, j] for j in range(n) if j != i and np.isfinite(d[i, j])]
        if ds:
            r = len(ds)
            out[i] = (r / sum(ds)) * (r / (n - 1))
    return out


def random_digraph(rng: np.random.Generator, n: int, p: float) -> np.ndarray:
    a = rng.random((n, n)) < p
    np.fill_diagonal(a, False)
    return a


# ---------------------------------------------------------------------------
# LASSO
# ---------------------------------------------------------------------------


def soft_threshold(z: np.ndarray, lam: float) -> np.ndarray:
    return np.sign(z) * np.maximum(np.abs(z) - lam, 0.0)


def orthonormal_design(rng: np.random.Generator, T: int, p: int) -> np.ndarray:
    """Centred ``X`` with ``X^T X / T = I``."""
    Z = rng.normal(size=(T, p))
    Z -= Z.mean(axis=0)
    Q, _ = np.linalg.qr(Z)
    # QR of a centred matrix keeps columns orthogonal to the ones vector
    return Q * math.sqrt(T)


def kkt_residual(y, X, beta, lam) -> float:
    """Largest violation of the LASSO optimality conditions."""
    T = X.shape[0]
    g = X.T @ (y - X @ beta) / T
    nz = beta != 0
    v = np.zeros_like(g)
    v[nz] = np.abs(g[nz] - lam * np.sign(beta[nz]))
    v[~nz] = np.maximum(np.abs(g[~nz]) - lam, 0.0)
    return float(v.max()) if v.size else 0.0
