import dataclasses

import numpy as np
import pytest

from conftest import random_digraph
from errors import OracleLimitError, ValidationError
from modules.graph_model import WeightedGraph, adjacency, line_graph
from modules.nbt_edge import CoefficientSeries, EdgeCentralityPlan, edge_centrality
from modules.nbt_node import nbt_katz, pk_recurrence
from modules.oracle import (
    enumerate_static_nbt,
    enumerate_temporal,
    iter_static_nbt_walks,
    iter_temporal_walks,
    run_static_battery,
    run_temporal_battery,
    truncated_centrality,
)
from modules.temporal import (
    BacktrackRegime,
    TemporalGraph,
    build_global,
    temporal_f_centrality,
    temporal_walk_counts,
)


def relative_gap(X, Y):
    X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    scale = max(np.abs(X).max(initial=0.0), np.abs(Y).max(initial=0.0))
    return np.abs(X - Y).max(initial=0.0) / scale if scale else 0.0


def unweighted_triangle():
    edges = tuple((i, j, 1.0) for i in range(3) for j in range(3) if i != j)
    return WeightedGraph(("a", "b", "c"), edges)


# ---------- static enumeration ----------

def test_static_walks_on_path(weighted_path):
    walks = sorted(iter_static_nbt_walks(weighted_path, 2), key=lambda w: w.nodes)
    assert [w.nodes for w in walks] == [(0, 1, 2), (2, 1, 0)]
    assert [w.weight for w in walks] == [2.0, 2.0]
    assert all(w.length == 2 for w in walks)


def test_closed_walks_on_triangle():
    p = enumerate_static_nbt(unweighted_triangle(), 3)
    np.testing.assert_array_equal(np.diag(p[3]), [2.0, 2.0, 2.0])
    np.testing.assert_array_equal(np.diag(p[2]), [0.0, 0.0, 0.0])


def test_reciprocated_pair_has_no_longer_walks(reciprocated_pair):
    p = enumerate_static_nbt(reciprocated_pair, 4)
    np.testing.assert_array_equal(p[1], [[0.0, 2.0], [2.0, 0.0]])
    for k in range(2, 5):
        assert not p[k].any()


def test_enumeration_guard(weighted_cycle):
    with pytest.raises(OracleLimitError):
        enumerate_static_nbt(unweighted_triangle(), 12, limit=1000)
    with pytest.raises(ValidationError):
        enumerate_static_nbt(weighted_cycle, -1)


def test_recurrence_matches_enumeration(random_digraphs):
    for g in random_digraphs:
        oracle = enumerate_static_nbt(g, 6)
        recurrence = pk_recurrence(adjacency(g), 6)
        for k in range(7):
            assert relative_gap(recurrence[k].toarray(), oracle[k]) <= 1e-12


def test_truncated_centrality_on_pair(reciprocated_pair):
    p = enumerate_static_nbt(reciprocated_pair, 3)
    t = 0.1
    np.testing.assert_allclose(truncated_centrality(p, t, CoefficientSeries.resolvent()), [1.2, 1.2])
    np.testing.assert_allclose(
        truncated_centrality(p, t, CoefficientSeries.custom([3.0, 0.5])), [3.1, 3.1]
    )


def max_row_sum(A) -> float:
    return float(np.asarray(A.sum(axis=1)).max(initial=0.0))


@pytest.mark.parametrize("kind", ["resolvent", "exponential"])
def test_truncated_walk_sums_approach_centrality(random_digraphs, kind):
    K = 6
    for g in random_digraphs:
        d = line_graph(g)
        norm = max_row_sum(d.A)
        t = 0.3 / norm if norm else 0.3
        if kind == "resolvent":
            series = CoefficientSeries.resolvent()
            exact = nbt_katz(d.A, t, decomposition=d)
        else:
            series = CoefficientSeries.exponential()
            exact = edge_centrality(EdgeCentralityPlan.build(d, series, t), tol=1e-13)
        gap = exact - truncated_centrality(enumerate_static_nbt(g, K), t, series)
        # p_k 1 <= A^k 1 <= norm^k entrywise and every coefficient is at most 1
        assert gap.min(initial=0.0) >= -1e-9
        assert gap.max(initial=0.0) <= 0.3 ** (K + 1) / 0.7 + 1e-9


# ---------- temporal enumeration ----------

def test_temporal_walks_on_pair(temporal_pair):
    walks = list(iter_temporal_walks(temporal_pair, BacktrackRegime.ALLOW_ALL, 2))
    assert len(walks) == 1
    assert walks[0].nodes == (0, 1, 0)
    assert walks[0].snapshots == (0, 1)
    assert walks[0].weight == 6.0
    assert list(iter_temporal_walks(temporal_pair, BacktrackRegime.FORBID_TIME, 2)) == []
    with pytest.raises(ValidationError):
        list(iter_temporal_walks(temporal_pair, BacktrackRegime.ALLOW_ALL, 0))


def test_space_rule_applies_within_a_snapshot():
    labels = ("1", "2")
    pair = WeightedGraph(labels, ((0, 1, 1.0), (1, 0, 1.0)))
    tg = TemporalGraph(labels, (pair,), (1,))
    assert len(list(iter_temporal_walks(tg, BacktrackRegime.FORBID_TIME, 2))) == 2
    assert list(iter_temporal_walks(tg, BacktrackRegime.FORBID_SPACE, 2)) == []


def test_temporal_counts_match_enumeration(random_temporal_graphs):
    for tg in random_temporal_graphs:
        for regime in BacktrackRegime:
            gd = build_global(tg, regime)
            counts = enumerate_temporal(tg, regime, 4)
            for k in range(1, 5):
                assert relative_gap(temporal_walk_counts(gd, k).toarray(), counts[k]) <= 1e-12


def test_single_snapshot_enumeration_projects_to_pk(rng):
    for _ in range(10):
        g = random_digraph(rng, int(rng.integers(2, 6)))
        tg = TemporalGraph(g.node_labels, (g,), (0,))
        gd = build_global(tg, BacktrackRegime.FORBID_ALL)
        counts = enumerate_temporal(tg, BacktrackRegime.FORBID_ALL, 3)
        p = pk_recurrence(adjacency(g), 4)
        for k in range(4):
            projected = gd.L.T @ (gd.R.T @ counts[k].T).T
            assert relative_gap(projected, p[k + 1].toarray()) <= 1e-12


@pytest.mark.parametrize("regime", list(BacktrackRegime))
def test_truncated_temporal_walk_sums_approach_centrality(random_temporal_graphs, regime):
    K = 4
    resolvent = CoefficientSeries.resolvent()
    for tg in random_temporal_graphs:
        # every step of a walk picks edges of total weight at most this sum
        norm = sum(max_row_sum(adjacency(g)) for g in tg.snapshots)
        t = 0.3 / norm if norm else 0.3
        gd = build_global(tg, regime)
        truncated = np.ones(tg.n)
        for k, counts in enumerate(enumerate_temporal(tg, regime, K)):
            truncated += t ** (k + 1) * (gd.L.T @ counts.sum(axis=1))
        gap = temporal_f_centrality(gd, resolvent, t) - truncated
        assert gap.min(initial=0.0) >= -1e-9
        assert gap.max(initial=0.0) <= 0.3 ** (K + 2) / 0.7 + 1e-9


# ---------- batteries ----------

@pytest.mark.parametrize("fixture", ["reciprocated_pair", "weighted_path", "weighted_cycle"])
def test_static_battery_passes_on_small_graphs(request, fixture):
    results = run_static_battery(request.getfixturevalue(fixture), 4)
    assert all(r.passed for r in results), [r for r in results if not r.passed]
    assert "binary closed form" not in {r.identity for r in results}


def test_static_battery_on_random_and_binary_graphs(random_digraphs):
    for g in random_digraphs[:20] + [unweighted_triangle()]:
        results = run_static_battery(g, 3)
        assert all(r.passed for r in results), [r for r in results if not r.passed]
    names = {r.identity for r in run_static_battery(unweighted_triangle(), 3)}
    assert "binary closed form" in names


def test_static_battery_on_edgeless_graph():
    results = run_static_battery(WeightedGraph(("a", "b", "c")), 3)
    assert all(r.passed for r in results)


def test_static_battery_detects_a_perturbed_transition(weighted_cycle):
    d = line_graph(weighted_cycle)
    broken = dataclasses.replace(d, V=d.V * 1.1)
    results = {r.identity: r for r in run_static_battery(weighted_cycle, 4, decomposition=broken)}
    assert not results["nbt projection (p_k via V) vs enumeration"].passed
    assert results["recurrence vs enumeration"].passed


def test_temporal_battery(temporal_pair, random_temporal_graphs):
    for tg in [temporal_pair] + random_temporal_graphs[:10]:
        results = run_temporal_battery(tg, 3)
        assert all(r.passed for r in results), [r for r in results if not r.passed]
        assert len(results) == len(BacktrackRegime) + 1
