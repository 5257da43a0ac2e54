import numpy as np
import pytest

from config import DATA_DIR
from modules.graph_model import WeightedGraph
from modules.temporal import TemporalGraph


def random_digraph(rng, n, p=0.4, low=0.5, high=2.0, integer=False, binary=False,
                   symmetric=False, reciprocation=True):
    labels = tuple(str(i + 1) for i in range(n))
    edges = {}
    for i in range(n):
        for j in range(n):
            if i == j or (j, i) in edges and (symmetric or not reciprocation):
                continue
            if rng.random() >= p:
                continue
            if binary:
                w = 1.0
            elif integer:
                w = float(rng.integers(1, 4))
            else:
                w = float(rng.uniform(low, high))
            edges[(i, j)] = w
            if symmetric:
                edges[(j, i)] = w
    return WeightedGraph(labels, tuple((i, j, w) for (i, j), w in edges.items()))


def random_temporal(rng, N, n, p=0.4, integer=False):
    snapshots = [random_digraph(rng, n, p=p, integer=integer) for _ in range(N)]
    return TemporalGraph(snapshots[0].node_labels, tuple(snapshots), tuple(range(1, N + 1)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def random_digraphs():
    gen = np.random.default_rng(7)
    return [random_digraph(gen, int(gen.integers(2, 7))) for _ in range(50)]


@pytest.fixture
def random_temporal_graphs():
    gen = np.random.default_rng(11)
    return [random_temporal(gen, int(gen.integers(1, 4)), int(gen.integers(2, 6))) for _ in range(20)]


# ---------- named small graphs ----------

@pytest.fixture
def reciprocated_pair():
    """1 <-> 2, both directions weight 2."""
    return WeightedGraph(("1", "2"), ((0, 1, 2.0), (1, 0, 2.0)))


@pytest.fixture
def weighted_path():
    """Undirected path 1 - 2 - 3 with weights 1 and 2."""
    return WeightedGraph(("1", "2", "3"), ((0, 1, 1.0), (1, 0, 1.0), (1, 2, 2.0), (2, 1, 2.0)))


@pytest.fixture
def weighted_cycle():
    """Directed 3-cycle 1 -> 2 -> 3 -> 1 with weights 1, 2, 3."""
    return WeightedGraph(("1", "2", "3"), ((0, 1, 1.0), (1, 2, 2.0), (2, 0, 3.0)))


@pytest.fixture
def temporal_pair():
    """Snapshot 1: 1 -> 2 (weight 2); snapshot 2: 2 -> 1 (weight 3)."""
    labels = ("1", "2")
    first = WeightedGraph(labels, ((0, 1, 2.0),))
    second = WeightedGraph(labels, ((1, 0, 3.0),))
    return TemporalGraph(labels, (first, second), (1.0, 2.0))


@pytest.fixture
def data_dir():
    return DATA_DIR
