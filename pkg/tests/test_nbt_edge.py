import math

import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp

from errors import AttenuationRangeError, TruncationError, ValidationError
from modules.graph_model import WeightedGraph, adjacency, line_graph
from modules.nbt_edge import (
    CoefficientSeries,
    EdgeCentralityPlan,
    apply_partial_f,
    convergence_radius,
    edge_centrality,
    line_walk_radius,
    phi_via_linegraph,
    project_pk,
    project_walk_counts,
)
from modules.nbt_node import nbt_katz, phi_dense, pk_recurrence
from modules.sparse_core import spectral_radius


def safe_t(d, fraction=0.5):
    S = d.A.multiply(d.A.T)
    max_q = np.sqrt(S.max()) if S.nnz else 0.0
    base = max(spectral_radius(d.V), max_q)
    return fraction / base if base > 0 else fraction


def uniform_cycle(n, w):
    labels = tuple(str(i + 1) for i in range(n))
    return WeightedGraph(labels, tuple((i, (i + 1) % n, w) for i in range(n)))


# ---------- projections ----------

def test_projection_of_zero_steps_is_adjacency(random_digraphs):
    for g in random_digraphs[:10]:
        d = line_graph(g)
        np.testing.assert_allclose(project_walk_counts(d, 0).toarray(), adjacency(g).toarray(), rtol=1e-14)


def test_walk_projection_on_weighted_cycle(weighted_cycle):
    d = line_graph(weighted_cycle)
    np.testing.assert_allclose(project_walk_counts(d, 2).toarray(), 6.0 * np.eye(3), rtol=1e-13)


def test_walk_projection_matches_matrix_powers(random_digraphs):
    for g in random_digraphs:
        d = line_graph(g)
        A = adjacency(g).toarray()
        for k in range(4):
            np.testing.assert_allclose(
                project_walk_counts(d, k).toarray(), np.linalg.matrix_power(A, k + 1),
                rtol=1e-12, atol=1e-12,
            )


def test_pk_projection_small_graphs(reciprocated_pair, weighted_path):
    assert project_pk(line_graph(reciprocated_pair), 1).nnz == 0
    p2 = project_pk(line_graph(weighted_path), 1).toarray()
    expected = np.zeros((3, 3))
    expected[0, 2] = expected[2, 0] = 2.0
    np.testing.assert_allclose(p2, expected, rtol=1e-14)


def test_pk_projection_matches_recurrence(random_digraphs):
    for g in random_digraphs:
        d = line_graph(g)
        p = pk_recurrence(d.A, 6)
        for k in range(6):
            expected = p[k + 1].toarray()
            scale = max(np.abs(expected).max(initial=0.0), 1.0)
            np.testing.assert_allclose(
                project_pk(d, k).toarray(), expected, rtol=1e-12, atol=1e-12 * scale
            )


def test_projection_rejects_negative_power(weighted_cycle):
    with pytest.raises(ValidationError):
        project_pk(line_graph(weighted_cycle), -1)


# ---------- coefficient series and ∂f ----------

def test_series_coefficients():
    assert CoefficientSeries.resolvent().coefficient(7) == 1.0
    assert CoefficientSeries.exponential().coefficient(4) == pytest.approx(1 / 24, rel=1e-14)
    custom = CoefficientSeries.custom([1.0, 2.0])
    assert custom.coefficient(1) == 2.0
    assert custom.coefficient(5) == 0.0
    assert custom.c0 == 1.0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": "bogus", "radius": 1.0},
        {"kind": "resolvent", "radius": 0.0},
        {"kind": "custom", "radius": 1.0},
        {"kind": "custom", "radius": 1.0, "coefficients": (1.0, -0.5)},
        {"kind": "custom", "radius": 1.0, "coefficients": (1.0,), "tail_bound": -1.0},
    ],
)
def test_series_validation(kwargs):
    with pytest.raises(ValidationError):
        CoefficientSeries(**kwargs)


def test_partial_f_of_zero_operator_returns_w():
    M = sp.csr_matrix((3, 3))
    w = np.array([1.0, 2.0, 3.0])
    for series in (CoefficientSeries.resolvent(), CoefficientSeries.exponential()):
        np.testing.assert_allclose(apply_partial_f(series, M, 0.7, w), w, rtol=1e-15)


def test_partial_f_resolvent_nilpotent():
    M = np.array([[0.0, 1.0], [0.0, 0.0]])
    y = apply_partial_f(CoefficientSeries.resolvent(), M, 0.5, np.ones(2))
    np.testing.assert_allclose(y, [1.5, 1.0], rtol=1e-14)


def test_partial_f_exponential_matches_block_expm(rng):
    n = 6
    M = rng.uniform(0, 1, (n, n)) * (rng.random((n, n)) < 0.5)
    w = rng.uniform(0.5, 1.5, n)
    t = 0.8
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = t * M
    block[:n, n:] = np.eye(n)
    expected = scipy.linalg.expm(block)[:n, n:] @ w
    y = apply_partial_f(CoefficientSeries.exponential(), M, t, w, tol=1e-13)
    np.testing.assert_allclose(y, expected, rtol=1e-10)


def test_partial_f_custom_is_exact_finite_sum(rng):
    M = rng.uniform(0, 1, (4, 4))
    w = rng.uniform(0.5, 1.5, 4)
    t = 0.3
    y = apply_partial_f(CoefficientSeries.custom([1.0, 1.0, 0.5]), M, t, w)
    np.testing.assert_allclose(y, w + 0.5 * t * (M @ w), rtol=1e-14)


def test_partial_f_custom_tail_over_tolerance():
    series = CoefficientSeries.custom([1.0, 1.0], tail_bound=1e-3)
    with pytest.raises(TruncationError, match="tail bound"):
        apply_partial_f(series, np.eye(2), 0.1, np.ones(2), tol=1e-8)


def test_partial_f_outside_radius():
    M = np.array([[0.0, 2.0], [2.0, 0.0]])
    with pytest.raises(AttenuationRangeError):
        apply_partial_f(CoefficientSeries.resolvent(), M, 0.5, np.ones(2))
    with pytest.raises(ValidationError):
        apply_partial_f(CoefficientSeries.exponential(), M, -0.1, np.ones(2))


# ---------- edge-level centrality ----------

def test_edge_centrality_reciprocated_pair(reciprocated_pair):
    d = line_graph(reciprocated_pair)
    plan = EdgeCentralityPlan.build(d, CoefficientSeries.resolvent(), 0.1)
    np.testing.assert_allclose(edge_centrality(plan), [1.2, 1.2], rtol=1e-13)


def test_edge_centrality_of_edgeless_graph_is_c0():
    d = line_graph(WeightedGraph(("a", "b")))
    plan = EdgeCentralityPlan.build(d, CoefficientSeries.custom([2.0, 1.0]), 0.3)
    np.testing.assert_array_equal(edge_centrality(plan), [2.0, 2.0])


def test_edge_route_agrees_with_node_route(random_digraphs):
    for g in random_digraphs:
        d = line_graph(g)
        for fraction in (0.25, 0.5, 0.9):
            t = safe_t(d, fraction)
            node = nbt_katz(d.A, t, decomposition=d)
            edge = edge_centrality(EdgeCentralityPlan.build(d, CoefficientSeries.resolvent(), t))
            np.testing.assert_allclose(edge, node, rtol=1e-10)


def test_exponential_edge_centrality_matches_series(random_digraphs):
    for g in random_digraphs[:15]:
        d = line_graph(g)
        t = safe_t(d, 0.5)
        p = pk_recurrence(d.A, 30)
        expected = sum((t ** k / math.factorial(k)) * (pk @ np.ones(g.n)) for k, pk in enumerate(p))
        plan = EdgeCentralityPlan.build(d, CoefficientSeries.exponential(), t)
        np.testing.assert_allclose(edge_centrality(plan, tol=1e-13), expected, rtol=1e-10)


def test_plan_rejects_t_beyond_radius(weighted_cycle):
    d = line_graph(weighted_cycle)
    with pytest.raises(AttenuationRangeError):
        EdgeCentralityPlan.build(d, CoefficientSeries.resolvent(), 0.6)


# ---------- Φ through the line graph ----------

def test_phi_via_linegraph_at_zero(weighted_path):
    np.testing.assert_array_equal(phi_via_linegraph(line_graph(weighted_path), 0.0), np.eye(3))


def test_phi_via_linegraph_without_reciprocation(weighted_cycle):
    d = line_graph(weighted_cycle)
    t = 0.3
    expected = np.linalg.inv(np.eye(3) - t * d.A.toarray())
    np.testing.assert_allclose(phi_via_linegraph(d, t), expected, rtol=1e-12)


def test_phi_routes_agree(random_digraphs):
    for g in random_digraphs:
        d = line_graph(g)
        for fraction in (0.25, 0.5, 0.9):
            t = safe_t(d, fraction)
            np.testing.assert_allclose(
                phi_via_linegraph(d, t), phi_dense(d.A, t, decomposition=d), rtol=1e-10, atol=1e-12
            )


# ---------- radii ----------

def test_convergence_radius_examples(weighted_path, weighted_cycle):
    assert convergence_radius(line_graph(weighted_path)) == np.inf
    assert convergence_radius(line_graph(weighted_cycle)) == pytest.approx(6 ** (-1 / 3), rel=1e-7)
    assert convergence_radius(line_graph(uniform_cycle(5, 2.5))) == pytest.approx(0.4, rel=1e-10)


def test_nonbacktracking_radius_below_walk_radius(random_digraphs):
    for g in random_digraphs:
        d = line_graph(g)
        assert spectral_radius(d.V) <= line_walk_radius(d) * (1 + 1e-6) + 1e-12


def test_walk_radius_equals_adjacency_radius(random_digraphs):
    for g in random_digraphs:
        d = line_graph(g)
        assert line_walk_radius(d) == pytest.approx(spectral_radius(d.A), rel=1e-6, abs=1e-10)


def test_binarized_radius_is_that_of_b(random_digraphs):
    for g in random_digraphs[:20]:
        d = line_graph(g.binarized())
        assert spectral_radius(d.V) == pytest.approx(spectral_radius(d.B), rel=1e-9, abs=1e-12)
