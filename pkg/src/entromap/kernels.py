"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

The public names at the bottom of this module are :class:`~entromap._accel.Kernel`
dispatchers; callers never pick a flavour directly.  Both flavours take and
return the same arrays, and the test-suite checks them against each other.

Status codes returned by :data:`lasso_path_gram`:
``0`` converged at every penalty, ``1`` sweep cap hit.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import kernel, njit

LN2 = math.log(2.0)


# ---------------------------------------------------------------------------
# scalar helpers
# ---------------------------------------------------------------------------


def _plogp_py(x):
    if x <= 0.0:
        return 0.0
    return x * math.log(x) / LN2


_plogp = njit(_plogp_py)


def plogp(x):
    """Elementwise ``x * log2(x)`` with ``0 log 0 = 0`` (numpy, vectorised)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log2(x[pos])
    return out


def _soft_threshold_py(z, lam):
    if z > lam:
        return z - lam
    if z < -lam:
        return z + lam
    return 0.0


_soft_threshold = njit(_soft_threshold_py)


# ---------------------------------------------------------------------------
# LASSO coordinate descent on a Gram matrix
# ---------------------------------------------------------------------------
# Minimises 0.5 * b'Gb - c'b + lam * |b|_1 (the 1/2T least-squares objective
# up to a constant), skipping coordinate ``skip`` which is pinned at zero.


def _cd_sweep_nb(G, c, lam, beta, Gb, coords):
    max_change = 0.0
    p = beta.shape[0]
    for t in range(coords.shape[0]):
        j = coords[t]
        gjj = G[j, j]
        old = beta[j]
        if gjj <= 0.0:
            new = 0.0
        else:
            rho = c[j] - Gb[j] + gjj * old
            new = _soft_threshold(rho, lam) / gjj
        d = new - old
        if d != 0.0:
            beta[j] = new
            for k in range(p):
                Gb[k] += G[k, j] * d
            if abs(d) > max_change:
                max_change = abs(d)
    return max_change


_cd_sweep_jit = njit(_cd_sweep_nb)


def _kkt_violation_nb(G, c, lam, beta, coords):
    p = beta.shape[0]
    worst = 0.0
    for t in range(coords.shape[0]):
        j = coords[t]
        g = c[j]
        for k in range(p):
            if beta[k] != 0.0:
                g -= G[j, k] * beta[k]
        if beta[j] > 0.0:
            v = abs(g - lam)
        elif beta[j] < 0.0:
            v = abs(g + lam)
        else:
            v = abs(g) - lam
        if v > worst:
            worst = v
    return worst


_kkt_violation_jit = njit(_kkt_violation_nb)


@njit
def _recompute_gb(G, beta, Gb):
    p = beta.shape[0]
    for k in range(p):
        Gb[k] = 0.0
    for j in range(p):
        if beta[j] != 0.0:
            for k in range(p):
                Gb[k] += G[k, j] * beta[j]


@njit
def _nonzero_coords(beta):
    n = 0
    for j in range(beta.shape[0]):
        if beta[j] != 0.0:
            n += 1
    out = np.empty(n, dtype=np.int64)
    n = 0
    for j in range(beta.shape[0]):
        if beta[j] != 0.0:
            out[n] = j
            n += 1
    return out


def _cd_sweep_np(G, c, lam, beta, Gb, coords):
    max_change = 0.0
    for j in coords:
        gjj = G[j, j]
        old = beta[j]
        if gjj <= 0.0:
            new = 0.0
        else:
            new = _soft_threshold_py(c[j] - Gb[j] + gjj * old, lam) / gjj
        d = new - old
        if d != 0.0:
            beta[j] = new
            Gb += G[:, j] * d
            max_change = max(max_change, abs(d))
    return max_change


def _kkt_violation_np(G, c, lam, beta, coords):
    grad = c[coords] - G[coords] @ beta
    b = beta[coords]
    viol = np.where(b > 0, np.abs(grad - lam), np.where(b < 0, np.abs(grad + lam), np.abs(grad) - lam))
    return float(max(viol.max(initial=0.0), 0.0))


def _active_sweeps_py(G, c, lam, beta, Gb, active, tol_coef, n, max_sweeps):
    """Sweep only ``active`` using plain floats; returns the updated sweep count."""
    idx = active.tolist()
    sub = G[np.ix_(active, active)].tolist()
    b = beta[active].tolist()
    gb = Gb[active].tolist()
    cc = c[active].tolist()
    s = len(idx)
    while n < max_sweeps:
        n += 1
        max_change = 0.0
        for t in range(s):
            row = sub[t]
            gjj = row[t]
            old = b[t]
            new = _soft_threshold_py(cc[t] - gb[t] + gjj * old, lam) / gjj if gjj > 0.0 else 0.0
            d = new - old
            if d != 0.0:
                b[t] = new
                for k in range(s):
                    gb[k] += sub[k][t] * d
                if abs(d) > max_change:
                    max_change = abs(d)
        if max_change <= tol_coef:
            break
    beta[active] = b
    Gb[:] = G @ beta
    return n


def _coords(p, skip):
    return np.array([j for j in range(p) if j != skip], dtype=np.int64)


def _lasso_path_np(G, c, lambdas, beta0, skip, tol_coef, tol_kkt, max_sweeps):
    p = c.shape[0]
    coords = _coords(p, skip)
    beta = np.zeros(p)
    beta[coords] = beta0[coords]
    Gb = G @ beta
    out = np.zeros((lambdas.shape[0], p))
    sweeps = np.zeros(lambdas.shape[0], dtype=np.int64)
    for li in range(lambdas.shape[0]):
        lam = lambdas[li]
        n = 0
        while True:
            if n >= max_sweeps:
                return out, sweeps, 1
            change = _cd_sweep_np(G, c, lam, beta, Gb, coords)
            n += 1
            if change <= tol_coef:
                Gb = G @ beta
                if _kkt_violation_np(G, c, lam, beta, coords) <= tol_kkt:
                    break
                continue
            # iterate on the current support until it settles
            n = _active_sweeps_py(G, c, lam, beta, Gb, np.flatnonzero(beta), tol_coef, n, max_sweeps)
        out[li] = beta
        sweeps[li] = n
    return out, sweeps, 0


@kernel(_lasso_path_np)
def lasso_path_gram(G, c, lambdas, beta0, skip, tol_coef, tol_kkt, max_sweeps):
    """Warm-started coordinate descent along ``lambdas`` on Gram ``G``.

    Converged means a full sweep moved no coefficient by more than
    ``tol_coef`` and every KKT condition holds to ``tol_kkt``.  Between full
    sweeps only the current support is swept.  Returns the coefficient
    path, sweeps used per penalty and a status code.
    """
    p = c.shape[0]
    n_coords = p - 1 if (skip >= 0 and skip < p) else p
    coords = np.empty(n_coords, dtype=np.int64)
    t = 0
    for j in range(p):
        if j != skip:
            coords[t] = j
            t += 1
    beta = np.zeros(p)
    for t in range(n_coords):
        beta[coords[t]] = beta0[coords[t]]
    Gb = np.zeros(p)
    _recompute_gb(G, beta, Gb)
    out = np.zeros((lambdas.shape[0], p))
    sweeps = np.zeros(lambdas.shape[0], dtype=np.int64)
    for li in range(lambdas.shape[0]):
        lam = lambdas[li]
        n = 0
        while True:
            if n >= max_sweeps:
                return out, sweeps, 1
            change = _cd_sweep_jit(G, c, lam, beta, Gb, coords)
            n += 1
            if change <= tol_coef:
                _recompute_gb(G, beta, Gb)
                if _kkt_violation_jit(G, c, lam, beta, coords) <= tol_kkt:
                    break
                continue
            active = _nonzero_coords(beta)
            while n < max_sweeps:
                n += 1
                if _cd_sweep_jit(G, c, lam, beta, Gb, active) <= tol_coef:
                    break
        out[li] = beta
        sweeps[li] = n
    return out, sweeps, 0


@kernel(_cd_sweep_np)
def cd_sweep(G, c, lam, beta, Gb, coords):
    """One coordinate-descent pass over ``coords``; returns the largest change."""
    return _cd_sweep_jit(G, c, lam, beta, Gb, coords)


# ---------------------------------------------------------------------------
# unweighted shortest paths
# ---------------------------------------------------------------------------


def _bfs_distances_np(indptr, indices, n):
    adj = np.zeros((n, n), dtype=np.float32)
    for u in range(n):
        adj[u, indices[indptr[u] : indptr[u + 1]]] = 1.0
    dist = np.full((n, n), -1, dtype=np.int32)
    np.fill_diagonal(dist, 0)
    frontier = np.eye(n, dtype=np.float32)
    seen = np.eye(n, dtype=bool)
    level = 0
    while frontier.any():
        level += 1
        nxt = ((frontier @ adj) > 0) & ~seen
        dist[nxt] = level
        seen |= nxt
        frontier = nxt.astype(np.float32)
    return dist


@kernel(_bfs_distances_np)
def bfs_distances(indptr, indices, n):
    """All-pairs hop distances from CSR out-neighbour lists; -1 if unreachable."""
    dist = np.full((n, n), -1, dtype=np.int32)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        row = dist[s]
        row[s] = 0
        head = 0
        tail = 1
        queue[0] = s
        while head < tail:
            u = queue[head]
            head += 1
            du = row[u] + 1
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                if row[v] < 0:
                    row[v] = du
                    queue[tail] = v
                    tail += 1
    return dist


def _brandes_np(indptr, indices, n):
    adj = np.zeros((n, n))
    for u in range(n):
        adj[u, indices[indptr[u] : indptr[u + 1]]] = 1.0
    # level-synchronous BFS from every source at once; rows are sources
    sigma = np.eye(n)
    dist = np.full((n, n), -1, dtype=np.int64)
    np.fill_diagonal(dist, 0)
    frontier = np.eye(n)
    depth = 0
    while frontier.any():
        reach = frontier @ adj
        new = (reach > 0) & (dist < 0)
        depth += 1
        dist[new] = depth
        sigma[new] = reach[new]
        frontier = np.where(new, sigma, 0.0)
    delta = np.zeros((n, n))
    for d in range(depth - 1, 0, -1):
        at_next = dist == d + 1
        coeff = np.where(at_next, (1.0 + delta) / np.where(at_next, sigma, 1.0), 0.0)
        pulled = coeff @ adj.T
        at_d = dist == d
        delta[at_d] = (sigma * pulled)[at_d]
    return delta.sum(axis=0)


@kernel(_brandes_np)
def brandes(indptr, indices, n):
    """Unnormalised betweenness summed over ordered (source, target) pairs."""
    bc = np.zeros(n)
    sigma = np.zeros(n)
    dist = np.full(n, -1, dtype=np.int64)
    delta = np.zeros(n)
    order = np.empty(n, dtype=np.int64)
    for s in range(n):
        sigma[:] = 0.0
        dist[:] = -1
        delta[:] = 0.0
        sigma[s] = 1.0
        dist[s] = 0
        head = 0
        tail = 1
        order[0] = s
        while head < tail:
            u = order[head]
            head += 1
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    order[tail] = v
                    tail += 1
                if dist[v] == dist[u] + 1:
                    sigma[v] += sigma[u]
        for k in range(tail - 1, 0, -1):
            w = order[k]
            coeff = (1.0 + delta[w]) / sigma[w]
            # predecessors of w are in-neighbours one level up; graph is
            # symmetric for our callers, so out-lists double as in-lists
            for e in range(indptr[w], indptr[w + 1]):
                v = indices[e]
                if dist[v] == dist[w] - 1:
                    delta[v] += sigma[v] * coeff
            bc[w] += delta[w]
    return bc


# ---------------------------------------------------------------------------
# map equation: greedy node moves
# ---------------------------------------------------------------------------


def _move_delta_py(q, qa, pa, qb, pb, p_u, exit_u, fout_a, fin_a, fout_b, fin_b):
    qa2 = qa - (exit_u - fout_a) + fin_a
    qb2 = qb + (exit_u - fout_b) - fin_b
    q2 = q - qa - qb + qa2 + qb2
    pa2 = pa - p_u
    pb2 = pb + p_u
    return (
        _plogp_py(q2)
        - _plogp_py(q)
        - 2.0 * (_plogp_py(qa2) + _plogp_py(qb2) - _plogp_py(qa) - _plogp_py(qb))
        + _plogp_py(qa2 + pa2)
        + _plogp_py(qb2 + pb2)
        - _plogp_py(qa + pa)
        - _plogp_py(qb + pb)
    )


@njit
def _move_delta_jit(q, qa, pa, qb, pb, p_u, exit_u, fout_a, fin_a, fout_b, fin_b):
    qa2 = qa - (exit_u - fout_a) + fin_a
    qb2 = qb + (exit_u - fout_b) - fin_b
    q2 = q - qa - qb + qa2 + qb2
    pa2 = pa - p_u
    pb2 = pb + p_u
    return (
        _plogp(q2)
        - _plogp(q)
        - 2.0 * (_plogp(qa2) + _plogp(qb2) - _plogp(qa) - _plogp(qb))
        + _plogp(qa2 + pa2)
        + _plogp(qb2 + pb2)
        - _plogp(qa + pa)
        - _plogp(qb + pb)
    )


def move_delta(q, qa, pa, qb, pb, p_u, exit_u, fout_a, fin_a, fout_b, fin_b):
    """Codelength change (bits) for moving a node of flow ``p_u`` from module a to b.

    ``exit_u`` is the node's flow to other nodes, ``fout_*``/``fin_*`` its
    flow to/from the *other* members of each module.
    """
    return _move_delta_py(q, qa, pa, qb, pb, p_u, exit_u, fout_a, fin_a, fout_b, fin_b)


def _move_sweep_np(order, node_flow, node_exit, out_ptr, out_idx, out_w, in_ptr, in_idx, in_w,
                   module, mod_exit, mod_flow, mod_size, total_exit, min_gain):
    n_moves = 0
    q = total_exit[0]
    for u in order:
        a = module[u]
        lo, hi = out_ptr[u], out_ptr[u + 1]
        li, hi_in = in_ptr[u], in_ptr[u + 1]
        mods = np.concatenate((module[out_idx[lo:hi]], module[in_idx[li:hi_in]]))
        if mods.size == 0:
            continue
        cand, inv = np.unique(mods, return_inverse=True)
        k_out = hi - lo
        fout = np.bincount(inv[:k_out], weights=out_w[lo:hi], minlength=cand.size)
        fin = np.bincount(inv[k_out:], weights=in_w[li:hi_in], minlength=cand.size)
        hit = np.flatnonzero(cand == a)
        fout_a = fout[hit[0]] if hit.size else 0.0
        fin_a = fin[hit[0]] if hit.size else 0.0
        best_b = -1
        best_d = 0.0
        for k in range(cand.size):
            b = cand[k]
            if b == a:
                continue
            d = _move_delta_py(q, mod_exit[a], mod_flow[a], mod_exit[b], mod_flow[b],
                               node_flow[u], node_exit[u], fout_a, fin_a, fout[k], fin[k])
            if d < -min_gain and (best_b < 0 or d < best_d or (d == best_d and b < best_b)):
                best_b = b
                best_d = d
        if best_b < 0:
            continue
        b = best_b
        k = int(np.searchsorted(cand, b))
        qa2 = mod_exit[a] - (node_exit[u] - fout_a) + fin_a
        qb2 = mod_exit[b] + (node_exit[u] - fout[k]) - fin[k]
        q = q - mod_exit[a] - mod_exit[b] + qa2 + qb2
        mod_exit[a] = qa2
        mod_exit[b] = qb2
        mod_flow[a] -= node_flow[u]
        mod_flow[b] += node_flow[u]
        mod_size[a] -= 1
        mod_size[b] += 1
        if mod_size[a] == 0:
            mod_exit[a] = 0.0
            mod_flow[a] = 0.0
        module[u] = b
        n_moves += 1
    total_exit[0] = q
    return n_moves


@kernel(_move_sweep_np)
def move_sweep(order, node_flow, node_exit, out_ptr, out_idx, out_w, in_ptr, in_idx, in_w,
               module, mod_exit, mod_flow, mod_size, total_exit, min_gain):
    """One pass of greedy node moves in ``order``; updates module state in place.

    Returns the number of accepted moves.  ``total_exit`` is a length-1 array
    holding the summed exit flow so the caller sees the update.
    """
    n_mod = mod_exit.shape[0]
    fout = np.zeros(n_mod)
    fin = np.zeros(n_mod)
    seen = np.zeros(n_mod, dtype=np.bool_)
    touched = np.empty(n_mod, dtype=np.int64)
    n_moves = 0
    q = total_exit[0]
    for t in range(order.shape[0]):
        u = order[t]
        a = module[u]
        n_touch = 0
        for e in range(out_ptr[u], out_ptr[u + 1]):
            m = module[out_idx[e]]
            if not seen[m]:
                seen[m] = True
                touched[n_touch] = m
                n_touch += 1
            fout[m] += out_w[e]
        for e in range(in_ptr[u], in_ptr[u + 1]):
            m = module[in_idx[e]]
            if not seen[m]:
                seen[m] = True
                touched[n_touch] = m
                n_touch += 1
            fin[m] += in_w[e]
        fout_a = fout[a]
        fin_a = fin[a]
        best_b = -1
        best_d = 0.0
        for k in range(n_touch):
            b = touched[k]
            if b == a:
                continue
            d = _move_delta_jit(q, mod_exit[a], mod_flow[a], mod_exit[b], mod_flow[b],
                                node_flow[u], node_exit[u], fout_a, fin_a, fout[b], fin[b])
            if d < -min_gain and (best_b < 0 or d < best_d or (d == best_d and b < best_b)):
                best_b = b
                best_d = d
        if best_b >= 0:
            b = best_b
            qa2 = mod_exit[a] - (node_exit[u] - fout_a) + fin_a
            qb2 = mod_exit[b] + (node_exit[u] - fout[b]) - fin[b]
            q = q - mod_exit[a] - mod_exit[b] + qa2 + qb2
            mod_exit[a] = qa2
            mod_exit[b] = qb2
            mod_flow[a] -= node_flow[u]
            mod_flow[b] += node_flow[u]
            mod_size[a] -= 1
            mod_size[b] += 1
            if mod_size[a] == 0:
                mod_exit[a] = 0.0
                mod_flow[a] = 0.0
            module[u] = b
            n_moves += 1
        for k in range(n_touch):
            m = touched[k]
            fout[m] = 0.0
            fin[m] = 0.0
            seen[m] = False
    total_exit[0] = q
    return n_moves


# ---------------------------------------------------------------------------
# map equation: batch evaluation over many partitions
# ---------------------------------------------------------------------------


def _codelength_many_np(labels, visit, src, dst, flow):
    k, n = labels.shape
    m = int(labels.max()) + 1 if labels.size else 1
    rows = np.repeat(np.arange(k), src.shape[0])
    ls = labels[:, src]
    ld = labels[:, dst]
    cross = (ls != ld).ravel()
    exit_ = np.bincount((rows * m + ls.ravel())[cross], weights=np.tile(flow, k)[cross], minlength=k * m)
    exit_ = exit_.reshape(k, m)
    pflow = np.bincount((np.repeat(np.arange(k), n) * m + labels.ravel()), weights=np.tile(visit, k),
                        minlength=k * m).reshape(k, m)
    q = exit_.sum(axis=1)
    node_term = plogp(visit).sum()
    return plogp(q) - 2.0 * plogp(exit_).sum(axis=1) - node_term + plogp(exit_ + pflow).sum(axis=1)


@kernel(_codelength_many_np)
def codelength_many(labels, visit, src, dst, flow):
    """Codelength in bits for each row of ``labels`` (module ids 0..m-1 per node)."""
    k, n = labels.shape
    node_term = 0.0
    for i in range(n):
        node_term += _plogp(visit[i])
    out = np.empty(k)
    exit_ = np.zeros(n + 1)
    pflow = np.zeros(n + 1)
    for r in range(k):
        m = 0
        for i in range(n):
            if labels[r, i] + 1 > m:
                m = labels[r, i] + 1
        for a in range(m):
            exit_[a] = 0.0
            pflow[a] = 0.0
        for i in range(n):
            pflow[labels[r, i]] += visit[i]
        for e in range(src.shape[0]):
            a = labels[r, src[e]]
            if a != labels[r, dst[e]]:
                exit_[a] += flow[e]
        q = 0.0
        acc = 0.0
        for a in range(m):
            q += exit_[a]
            acc += -2.0 * _plogp(exit_[a]) + _plogp(exit_[a] + pflow[a])
        out[r] = _plogp(q) + acc - node_term
    return out
