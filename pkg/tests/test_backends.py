"""The numba kernels and their numpy fallbacks must agree."""

import numpy as np
import pytest

import builders
import oracles
from entromap import _accel, kernels, lasso_net as ln, mapeq_flow as mf, topo
from entromap.mapeq_search import SearchConfig, optimize

pytestmark = pytest.mark.skipif(not _accel.NUMBA_AVAILABLE, reason="numba not installed")


def both(fn):
    with _accel.use_backend("numba"):
        a = fn()
    with _accel.use_backend("numpy"):
        b = fn()
    return a, b


def test_backend_switch():
    before = _accel.get_backend()
    with _accel.use_backend("numpy"):
        assert _accel.get_backend() == "numpy"
        assert "numpy" in repr(kernels.lasso_path_gram)
    assert _accel.get_backend() == before
    with pytest.raises(ValueError):
        _accel.set_backend("fortran")


@pytest.mark.parametrize("seed", range(3))
def test_lasso_path(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, 6)) + rng.normal(size=(40, 1))
    y = X[:, 0] - X[:, 3] + rng.normal(size=40)
    X -= X.mean(axis=0)
    y -= y.mean()
    grid = ln.default_lambda_grid(ln.lambda_max(y, X), 15)
    a, b = both(lambda: ln.solve_lasso_path(y, X, grid))
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_cd_sweep():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 5))
    G = np.ascontiguousarray(X.T @ X / 30)
    c = X.T @ rng.normal(size=30) / 30
    coords = np.arange(5, dtype=np.int64)

    def run():
        beta, Gb = np.zeros(5), np.zeros(5)
        changes = [kernels.cd_sweep(G, c, 0.01, beta, Gb, coords) for _ in range(5)]
        return beta, Gb, changes

    (b1, g1, c1), (b2, g2, c2) = both(run)
    np.testing.assert_allclose(b1, b2, atol=1e-14)
    np.testing.assert_allclose(g1, g2, atol=1e-14)
    np.testing.assert_allclose(c1, c2, atol=1e-14)


def test_small_network_fit():
    rng = np.random.default_rng(2)
    R = rng.normal(size=(40, 4))
    R[:, 1] += R[:, 0]
    a, b = both(lambda: ln.build_adjacency(ln.fit_network(R, seed=1), 4))
    assert a == b


@pytest.mark.parametrize("seed", range(3))
def test_graph_kernels(seed):
    rng = np.random.default_rng(seed)
    adj = oracles.random_digraph(rng, 25, 0.1)
    for mode in topo.MODES:
        a, b = both(lambda: topo.distance_matrix(adj, mode))
        np.testing.assert_array_equal(a, b)
    a, b = both(lambda: topo.relative_betweenness(adj))
    np.testing.assert_allclose(a, b, atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_codelength_many(seed):
    rng = np.random.default_rng(seed)
    fs = builders.random_stock_system(rng, 6)
    labs = rng.integers(0, 3, size=(50, fs.active.sum()))
    a, b = both(lambda: mf.codelength_many(fs, labs))
    np.testing.assert_allclose(a, b, atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_search(seed):
    fs = builders.random_stock_system(np.random.default_rng(seed), 10)
    a, b = both(lambda: optimize(fs, SearchConfig(seed=seed, n_restarts=2)))
    np.testing.assert_array_equal(a.best.labels, b.best.labels)
    np.testing.assert_allclose(a.trace, b.trace, atol=1e-12)
