"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 3] [--skip-lasso-numpy]

The numpy LASSO fallback is slow on correlated designs (one Python-level
coordinate update at a time), so its problem is kept small.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from entromap import _accel, lasso_net as ln, mapeq_flow as mf, topo
from entromap.lasso_net import DirectedAdjacency
from entromap.mapeq_search import SearchConfig, optimize


def _sbm(n, blocks, p_in, p_out, seed):
    rng = np.random.default_rng(seed)
    truth = np.arange(n) % blocks
    a = rng.random((n, n)) < np.where(truth[:, None] == truth[None, :], p_in, p_out)
    np.fill_diagonal(a, False)
    return a


def cases():
    rng = np.random.default_rng(0)
    R = rng.normal(size=(150, 12)) + 0.5 * rng.normal(size=(150, 1))
    y = R[:, 0] - R[:, 0].mean()
    X = R[:, 1:] - R[:, 1:].mean(axis=0)
    grid = ln.default_lambda_grid(ln.lambda_max(y, X))
    graph = _sbm(200, 5, 0.2, 0.01, 1)
    fs = mf.build_flow_system(DirectedAdjacency.from_matrix(_sbm(120, 4, 0.4, 0.02, 2)))
    labels = rng.integers(0, 6, size=(2000, fs.active.sum()))
    return {
        "lasso path (T=150, p=11, 100 lambdas)": lambda: ln.solve_lasso_path(y, X, grid),
        "BFS all-pairs (N=200)": lambda: topo.distance_matrix(graph),
        "Brandes betweenness (N=200)": lambda: topo.relative_betweenness(graph),
        "codelength batch (2000 partitions)": lambda: mf.codelength_many(fs, labels),
        "map-equation search (240 nodes, 2 restarts)": lambda: optimize(fs, SearchConfig(n_restarts=2)),
    }


def bench(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--skip-lasso-numpy", action="store_true")
    args = ap.parse_args()
    if not _accel.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':46s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, fn in cases().items():
        with _accel.use_backend("numba"):
            fn()  # compile
            t_nb = bench(fn, args.repeat)
        if args.skip_lasso_numpy and name.startswith("lasso"):
            print(f"{name:46s} {t_nb:10.4f} {'skipped':>10s}")
            continue
        with _accel.use_backend("numpy"):
            t_np = bench(fn, args.repeat)
        print(f"{name:46s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
