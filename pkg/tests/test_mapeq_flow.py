import math

import numpy as np
import pytest

import builders
import oracles
from entromap import mapeq_flow as mf
from entromap.mapeq_flow import FlowError, Partition


@pytest.mark.parametrize("p, h", [([1.0], 0.0), ([0.5, 0.5], 1.0), ([0.25] * 4, 2.0), ([0.0, 1.0], 0.0)])
def test_entropy_examples(p, h):
    assert mf.entropy(p) == pytest.approx(h, abs=1e-15)


def test_entropy_rejects_negative():
    with pytest.raises(ValueError):
        mf.entropy([1.5, -0.5])


def test_complete_digraph_n3_uniform_visit():
    fs = builders.flow_from_edges(*builders.complete(3))
    np.testing.assert_allclose(fs.visit, np.full(6, 1 / 6), atol=1e-12)
    P = fs.transition.toarray()
    np.testing.assert_allclose(P @ fs.visit, fs.visit, atol=1e-12)
    # every active column is uniform over its two neighbours
    np.testing.assert_allclose(P[P > 0], 0.5)


def test_single_edge_two_cycle():
    fs = builders.flow_from_edges([(0, 1)], 2)
    # node 0 = out-role of stock 0, node 3 = in-role of stock 1
    np.testing.assert_array_equal(fs.active, [True, False, False, True])
    np.testing.assert_allclose(fs.visit, [0.5, 0, 0, 0.5], atol=1e-12)
    one = Partition.one_module(fs)
    assert mf.codelength(fs, one).total == pytest.approx(1.0, abs=1e-12)
    split = Partition(fs, [0, -1, -1, 1])
    exit_, usage, q = mf.module_flow_stats(fs, split.labels)
    assert q == pytest.approx(1.0, abs=1e-12)


def test_empty_adjacency_is_error():
    with pytest.raises(FlowError):
        builders.flow_from_edges([], 3)


@pytest.mark.parametrize("seed", range(20))
def test_flow_invariants(seed):
    fs = builders.random_flow_systems(seed, 1)[0] if seed % 2 else builders.random_stock_system(np.random.default_rng(seed), 8)
    P = fs.transition
    colsum = np.asarray(P.sum(axis=0)).ravel()
    np.testing.assert_allclose(colsum[fs.active], 1.0, atol=1e-12)
    assert np.all(colsum[~fs.active] == 0)
    assert np.max(np.abs(P @ fs.visit - fs.visit)) <= 1e-10
    assert fs.visit.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(fs.visit[~fs.active] == 0) and np.all(fs.visit >= 0)
    np.testing.assert_allclose(fs.flow, P.toarray()[fs.dst, fs.src] * fs.visit[fs.src])


def test_stats_one_module_and_singletons():
    fs = builders.flow_from_edges(*builders.two_cliques_bridge())
    exit_, usage, q = mf.module_flow_stats(fs, Partition.one_module(fs).labels)
    assert q == 0 and exit_[0] == 0 and usage[0] == pytest.approx(1.0)
    s = Partition.singletons(fs)
    # no self-loops in V: singletons exit with all their visit mass
    np.testing.assert_allclose(s.exit_flow, fs.visit[s.fs.active_nodes][np.argsort(s.labels[fs.active])], atol=1e-15)


@pytest.mark.parametrize("seed", range(30))
def test_codelength_matches_straight_line_oracle(seed):
    rng = np.random.default_rng(seed)
    fs = builders.random_flow_systems(seed, 1)[0]
    Pi = fs.transition.toarray()
    for _ in range(5):
        labels = np.where(fs.active, rng.integers(0, 4, fs.n_flow), -1)
        rep = mf.codelength(fs, labels)
        assert rep.total == pytest.approx(oracles.straight_line_codelength(Pi, fs.visit, labels), abs=1e-12)
        assert rep.total == pytest.approx(rep.index_term + rep.module_terms.sum(), abs=1e-12)
        assert rep.total >= 0


@pytest.mark.parametrize("seed", range(10))
def test_one_module_equals_entropy(seed):
    fs = builders.random_flow_systems(seed + 100, 1)[0]
    assert mf.codelength(fs, Partition.one_module(fs)).total == pytest.approx(mf.entropy(fs.visit), abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_relabel_invariance(seed):
    rng = np.random.default_rng(seed)
    fs = builders.random_flow_systems(seed + 200, 1)[0]
    labels = np.where(fs.active, rng.integers(0, 5, fs.n_flow), -1)
    perm = rng.permutation(5)
    relabelled = np.where(labels >= 0, perm[np.maximum(labels, 0)], -1)
    assert abs(mf.codelength(fs, labels).total - mf.codelength(fs, relabelled).total) <= 1e-15


@pytest.mark.parametrize("seed", range(10))
def test_exit_total_equals_cross_edge_flow(seed):
    rng = np.random.default_rng(seed)
    fs = builders.random_flow_systems(seed + 300, 1)[0]
    labels = np.where(fs.active, rng.integers(0, 3, fs.n_flow), -1)
    _, _, q = mf.module_flow_stats(fs, labels)
    Pi = fs.transition.toarray()
    brute = sum(Pi[j, i] * fs.visit[i] for i in range(fs.n_flow) for j in range(fs.n_flow)
                if labels[i] >= 0 and labels[i] != labels[j])
    assert q == pytest.approx(brute, abs=1e-12)


@pytest.mark.parametrize("seed", range(15))
def test_incremental_moves_match_recompute(seed):
    rng = np.random.default_rng(seed)
    fs = builders.random_stock_system(rng, 8)
    act = fs.active_nodes
    part = Partition(fs, np.where(fs.active, rng.integers(0, 3, fs.n_flow), -1))
    for _ in range(40):
        node = int(rng.choice(act))
        target = None if rng.random() < 0.2 else int(rng.integers(0, part.m))
        before = mf.codelength(fs, part).total
        delta = mf.delta_codelength(fs, part, node, target)
        part.move(node, target)
        after = mf.codelength(fs, part).total
        assert delta == pytest.approx(after - before, abs=1e-12)
        exit_, usage, _ = mf.module_flow_stats(fs, part.labels)
        np.testing.assert_allclose(part.exit_flow, exit_, atol=1e-12)
        np.testing.assert_allclose(part.node_flow, usage - exit_, atol=1e-12)
        np.testing.assert_array_equal(part.size, np.bincount(part.labels[act], minlength=part.m))
        assert sorted(set(part.labels[act].tolist())) == list(range(part.m))
        assert np.all(part.size > 0)


def test_delta_noop_and_reversal():
    fs = builders.flow_from_edges(*builders.two_cliques_bridge())
    part = Partition.singletons(fs)
    assert part.delta(0, int(part.labels[0])) == 0.0
    target = int(part.labels[1])
    d = part.delta(0, target)
    part.move(0, target)
    back = part.delta(0, None)
    assert back == pytest.approx(-d, abs=1e-12)


def test_partition_rejects_uncovered_active_node():
    fs = builders.flow_from_edges(*builders.complete(3))
    with pytest.raises(FlowError):
        Partition(fs, [0, 0, -1, 0, 0, 0])


def test_codelength_many_matches_single():
    fs = builders.flow_from_edges(*builders.two_cliques_bridge())
    rng = np.random.default_rng(0)
    labs = rng.integers(0, 4, size=(20, fs.active.sum()))
    got = mf.codelength_many(fs, labs)
    for k in range(20):
        full = np.full(fs.n_flow, -1)
        full[fs.active_nodes] = labs[k]
        assert got[k] == pytest.approx(mf.codelength(fs, full).total, abs=1e-12)


def test_flow_json_shape():
    fs = builders.flow_from_edges(*builders.two_cliques_bridge())
    part = Partition(fs, np.r_[[0, 0, 0, 1, 1, 1], [0, 0, 0, 1, 1, 1]])
    doc = mf.flow_to_json(fs, part)
    assert set(doc) == {"nodes", "modules", "codelength_bits"}
    assert len(doc["nodes"]) == 12 and len(doc["modules"]) == 2
    assert math.isclose(sum(n["visit"] for n in doc["nodes"]), 1.0)
    assert doc["codelength_bits"] == mf.codelength(fs, part).total
