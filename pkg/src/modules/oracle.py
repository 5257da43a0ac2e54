"""
Brute-force walk enumeration, used as ground truth.

Static walks are node sequences without an i -> j -> i step. Temporal walks
are sequences of (edge, snapshot) pairs with non-decreasing snapshots, where
each consecutive pair is filtered by the regime's space/time rule. The
battery functions compare every closed form in the package against these
counts.
"""

import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from config import ORACLE_COUNT_TOL, ORACLE_FUNCTION_TOL, ORACLE_WALK_LIMIT
from errors import OracleLimitError, ValidationError
from modules.graph_model import (
    LineGraphDecomposition,
    WeightedGraph,
    adjacency,
    line_graph,
    walk_transition_sqrt,
)
from modules.nbt_edge import (
    CoefficientSeries,
    EdgeCentralityPlan,
    edge_centrality,
    phi_via_linegraph,
    project_pk,
    project_walk_counts,
)
from modules.nbt_node import (
    nbt_katz,
    pk_recurrence,
    phi_binary_closed_form,
    phi_dense,
    reciprocal_part,
)
from modules.sparse_core import matmul, spectral_radius, sqrt_elementwise, to_dense
from modules.temporal import (
    BacktrackRegime,
    TemporalGraph,
    build_M_forbid_all_fast,
    build_global,
    global_edge_index,
    temporal_walk_counts,
)

logger = logging.getLogger(__name__)

FAST_ASSEMBLY_TOL = 1e-14


@dataclass(frozen=True)
class WalkRecord:
    """
    nodes i_1..i_{l+1}; snapshots holds one snapshot index per edge for
    temporal walks and is empty for static ones.
    """

    nodes: Tuple[int, ...]
    weight: float
    snapshots: Tuple[int, ...] = ()

    @property
    def length(self) -> int:
        return len(self.nodes) - 1


@dataclass(frozen=True)
class CheckResult:
    identity: str
    deviation: float
    tol: float
    passed: bool


def _guard(starts: int, branching: int, kmax: int, limit: int) -> None:
    estimate = float(sum(starts * float(branching) ** k for k in range(kmax + 1)))
    if estimate > limit:
        raise OracleLimitError(estimate, limit)


# -------------------------------------------------------------------
# STATIC
# -------------------------------------------------------------------
def _out_lists(g: WeightedGraph):
    out = [[] for _ in range(g.n)]
    for s, d, w in g.edges:
        out[s].append((d, w))
    return out


def _static_walks(g: WeightedGraph, kmax: int) -> Iterator[WalkRecord]:
    out = _out_lists(g)
    for start in range(g.n):
        stack = [((start,), 1.0)]
        while stack:
            nodes, weight = stack.pop()
            yield WalkRecord(nodes, weight)
            if len(nodes) - 1 == kmax:
                continue
            for nxt, w in reversed(out[nodes[-1]]):
                if len(nodes) >= 2 and nxt == nodes[-2]:
                    continue
                stack.append((nodes + (nxt,), weight * w))


def iter_static_nbt_walks(g: WeightedGraph, length: int) -> Iterator[WalkRecord]:
    """Every non-backtracking walk with exactly `length` edges."""
    for walk in _static_walks(g, length):
        if walk.length == length:
            yield walk


def enumerate_static_nbt(g: WeightedGraph, kmax: int,
                         limit: int = ORACLE_WALK_LIMIT) -> List[np.ndarray]:
    """Dense [p_0 .. p_kmax] by depth-first enumeration."""
    if kmax < 0:
        raise ValidationError(f"kmax must be nonnegative, got {kmax}")
    branching = max((len(o) for o in _out_lists(g)), default=0)
    _guard(g.n, branching, kmax, limit)
    p = [np.zeros((g.n, g.n)) for _ in range(kmax + 1)]
    for walk in _static_walks(g, kmax):
        p[walk.length][walk.nodes[0], walk.nodes[-1]] += walk.weight
    return p


def truncated_centrality(p_list: Sequence, t: float, series: CoefficientSeries) -> np.ndarray:
    """Σ_k c_k t^k p_k 1 over the supplied terms."""
    n = p_list[0].shape[0]
    total = np.zeros(n)
    for k, pk in enumerate(p_list):
        total += series.coefficient(k) * t ** k * (to_dense(pk) @ np.ones(n))
    return total


# -------------------------------------------------------------------
# TEMPORAL
# -------------------------------------------------------------------
def _permitted(regime: BacktrackRegime, e, f) -> bool:
    # e, f are (snapshot, src, dst); f continues e
    if f[2] != e[1]:
        return True
    if e[0] == f[0]:
        return not regime.forbid_space
    return not regime.forbid_time


def _temporal_successors(tg: TemporalGraph, regime: BacktrackRegime):
    index = global_edge_index(tg)
    successors = [[] for _ in index]
    for a, e in enumerate(index):
        for b, f in enumerate(index):
            if f[0] >= e[0] and f[1] == e[2] and _permitted(regime, e, f):
                successors[a].append(b)
    return index, successors


def _temporal_walks(tg: TemporalGraph, regime: BacktrackRegime, kmax: int):
    index, successors = _temporal_successors(tg, regime)
    weights = np.concatenate([g.weights for g in tg.snapshots]) if index else np.zeros(0)
    for start in range(len(index)):
        stack = [((start,), float(weights[start]))]
        while stack:
            edges, weight = stack.pop()
            yield edges, weight
            if len(edges) - 1 == kmax:
                continue
            for nxt in reversed(successors[edges[-1]]):
                stack.append((edges + (nxt,), weight * weights[nxt]))


def iter_temporal_walks(tg: TemporalGraph, regime: BacktrackRegime,
                        length: int) -> Iterator[WalkRecord]:
    """Every permitted labelled temporal walk with exactly `length` edges (length >= 1)."""
    if length < 1:
        raise ValidationError(f"temporal walks have at least one edge, got length {length}")
    index = global_edge_index(tg)
    for edges, weight in _temporal_walks(tg, regime, length - 1):
        if len(edges) == length:
            nodes = (index[edges[0]][1],) + tuple(index[e][2] for e in edges)
            yield WalkRecord(nodes, weight, tuple(index[e][0] for e in edges))


def enumerate_temporal(tg: TemporalGraph, regime: BacktrackRegime, kmax: int,
                       limit: int = ORACLE_WALK_LIMIT) -> List[np.ndarray]:
    """
    Edge-level counts [C_0 .. C_kmax]; C_k[e, f] sums the weights of permitted
    walks with k+1 edges that start on global edge e and end on f.
    """
    if kmax < 0:
        raise ValidationError(f"kmax must be nonnegative, got {kmax}")
    index, successors = _temporal_successors(tg, regime)
    m = len(index)
    _guard(m, max((len(s) for s in successors), default=0), kmax, limit)
    counts = [np.zeros((m, m)) for _ in range(kmax + 1)]
    for edges, weight in _temporal_walks(tg, regime, kmax):
        counts[len(edges) - 1][edges[0], edges[-1]] += weight
    return counts


# -------------------------------------------------------------------
# BATTERIES
# -------------------------------------------------------------------
def _relative_deviation(X, Y) -> float:
    X, Y = to_dense(X), to_dense(Y)
    if X.size == 0:
        return 0.0
    scale = max(np.abs(X).max(), np.abs(Y).max())
    return float(np.abs(X - Y).max() / scale) if scale > 0 else 0.0


def _result(identity: str, deviation: float, tol: float) -> CheckResult:
    return CheckResult(identity, deviation, tol, bool(deviation <= tol))


def check_parameter(d: LineGraphDecomposition) -> float:
    """Half of the smaller of 1/ρ(V) and the elementwise pole 1/max Q."""
    rho_V = spectral_radius(d.V)
    S = reciprocal_part(d.A)
    max_q = float(np.sqrt(S.data.max())) if S.nnz else 0.0
    base = max(rho_V, max_q)
    return 0.5 / base if base > 0 else 0.5


def run_static_battery(g: WeightedGraph, kmax: int,
                       decomposition: Optional[LineGraphDecomposition] = None,
                       count_tol: float = ORACLE_COUNT_TOL,
                       function_tol: float = ORACLE_FUNCTION_TOL) -> List[CheckResult]:
    """Cross-validate recurrence, projections and both generating-function routes."""
    d = decomposition if decomposition is not None else line_graph(g)
    A = adjacency(g)
    oracle = enumerate_static_nbt(g, kmax)
    recurrence = pk_recurrence(A, kmax)

    results = [
        _result("adjacency factorization",
                _relative_deviation(matmul(matmul(d.L.T, d.Z), d.R), A), count_tol),
        _result("line graph factorization",
                _relative_deviation(walk_transition_sqrt(d), sqrt_elementwise(d.W)), count_tol),
        _result("recurrence vs enumeration",
                max(_relative_deviation(recurrence[k], oracle[k]) for k in range(kmax + 1)),
                count_tol),
    ]
    if kmax >= 1:
        results.append(_result(
            "nbt projection (p_k via V) vs enumeration",
            max(_relative_deviation(project_pk(d, k - 1), oracle[k]) for k in range(1, kmax + 1)),
            count_tol,
        ))
        Ad = to_dense(A)
        results.append(_result(
            "walk projection vs powers",
            max(_relative_deviation(project_walk_counts(d, k - 1), np.linalg.matrix_power(Ad, k))
                for k in range(1, kmax + 1)),
            count_tol,
        ))

    t = check_parameter(d)
    phi = phi_dense(A, t, decomposition=d)
    results.append(_result("node vs edge generating function",
                           _relative_deviation(phi, phi_via_linegraph(d, t)), function_tol))
    plan = EdgeCentralityPlan.build(d, CoefficientSeries.resolvent(), t)
    results.append(_result("node vs edge centrality",
                           _relative_deviation(nbt_katz(A, t, decomposition=d), edge_centrality(plan)),
                           function_tol))
    if g.is_binary():
        results.append(_result("binary closed form",
                               _relative_deviation(phi_binary_closed_form(A, t), phi),
                               function_tol))

    for r in results:
        logger.debug("%s: deviation %.3e (tol %.1e) %s", r.identity, r.deviation, r.tol,
                     "ok" if r.passed else "FAILED")
    return results


def run_temporal_battery(tg: TemporalGraph, kmax: int,
                         count_tol: float = ORACLE_COUNT_TOL) -> List[CheckResult]:
    """Walk counts per regime against enumeration, and the two forbid-all assemblies."""
    results = []
    for regime in BacktrackRegime:
        gd = build_global(tg, regime)
        counts = enumerate_temporal(tg, regime, kmax)
        deviation = max(
            (_relative_deviation(temporal_walk_counts(gd, k), counts[k]) for k in range(1, kmax + 1)),
            default=0.0,
        )
        results.append(_result(f"temporal walks vs enumeration ({regime.value})", deviation, count_tol))

    direct = build_global(tg, BacktrackRegime.FORBID_ALL).M
    fast = build_M_forbid_all_fast(tg)
    deviation = _relative_deviation(fast, direct)
    same_pattern = (abs(fast).sign() != abs(direct).sign()).nnz == 0
    results.append(CheckResult("fast forbid-all assembly", deviation, FAST_ASSEMBLY_TOL,
                               bool(same_pattern and deviation <= FAST_ASSEMBLY_TOL)))
    return results
