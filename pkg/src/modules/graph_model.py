"""
Graph ingestion and the static line-graph decomposition.

Edge lists are read with pandas, validated into an immutable WeightedGraph,
and decomposed into the source/target/weight matrices L, R, Z together with
the line graph W, its non-backtracking part B and V = B^∘1/2.
"""

import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.io
import scipy.sparse as sp

from errors import GraphFormatError, NumericalError
from modules.sparse_core import (
    elementwise_map,
    hadamard,
    matmul,
    sqrt_elementwise,
    subtract,
)

logger = logging.getLogger(__name__)

MERGE_RULES = ("reject", "sum")
_SEPARATOR = r"[,\s]+"


@dataclass(frozen=True)
class IngestOptions:
    sort_nodes: bool = False
    merge: str = "reject"
    drop_loops: bool = False

    def __post_init__(self):
        if self.merge not in MERGE_RULES:
            raise GraphFormatError(f"unknown merge rule {self.merge!r} (use one of {MERGE_RULES})")


# -------------------------------------------------------------------
# WEIGHTED GRAPH
# -------------------------------------------------------------------
@dataclass(frozen=True)
class WeightedGraph:
    """
    Directed, positively weighted, loop-free graph on nodes 0..n-1.

    edges holds (src, dst, weight) triples, kept in lexicographic
    (src, dst) order, which is also the canonical edge labelling.
    """

    node_labels: Tuple[str, ...]
    edges: Tuple[Tuple[int, int, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "node_labels", tuple(str(v) for v in self.node_labels))
        n = len(self.node_labels)
        if len(set(self.node_labels)) != n:
            raise GraphFormatError("node labels must be unique")
        cleaned = []
        seen = set()
        for src, dst, weight in self.edges:
            src, dst, weight = int(src), int(dst), float(weight)
            if not (0 <= src < n and 0 <= dst < n):
                raise GraphFormatError(f"edge ({src}, {dst}) refers to a node outside 0..{n - 1}")
            if src == dst:
                raise GraphFormatError(f"self-loop on node {self.node_labels[src]!r}")
            if not np.isfinite(weight) or weight <= 0:
                raise GraphFormatError(f"edge ({src}, {dst}) has non-positive weight {weight!r}")
            if (src, dst) in seen:
                raise GraphFormatError(f"duplicate edge ({src}, {dst})")
            seen.add((src, dst))
            cleaned.append((src, dst, weight))
        cleaned.sort(key=lambda e: (e[0], e[1]))
        object.__setattr__(self, "edges", tuple(cleaned))

    @property
    def n(self) -> int:
        return len(self.node_labels)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, _, w in self.edges], dtype=float)

    def binarized(self) -> "WeightedGraph":
        return WeightedGraph(self.node_labels, tuple((s, d, 1.0) for s, d, _ in self.edges))

    def relabeled(self, permutation: Sequence[int]) -> "WeightedGraph":
        """Node i moves to position permutation[i]."""
        perm = list(permutation)
        labels = [""] * self.n
        for old, new in enumerate(perm):
            labels[new] = self.node_labels[old]
        return WeightedGraph(tuple(labels), tuple((perm[s], perm[d], w) for s, d, w in self.edges))

    def is_binary(self) -> bool:
        return all(w == 1.0 for _, _, w in self.edges)

    @classmethod
    def from_matrix(cls, A, node_labels: Optional[Sequence[str]] = None) -> "WeightedGraph":
        coo = sp.coo_matrix(A)
        labels = node_labels or [str(i) for i in range(coo.shape[0])]
        edges = [(int(i), int(j), float(v)) for i, j, v in zip(coo.row, coo.col, coo.data) if v != 0]
        return cls(tuple(labels), tuple(edges))


def adjacency(g: WeightedGraph) -> sp.csr_matrix:
    """A with A_ij = weight of edge i -> j."""
    if g.m == 0:
        return sp.csr_matrix((g.n, g.n), dtype=float)
    src, dst, w = (np.array(col) for col in zip(*g.edges))
    return sp.csr_matrix((w.astype(float), (src.astype(int), dst.astype(int))), shape=(g.n, g.n))


# -------------------------------------------------------------------
# INGESTION
# -------------------------------------------------------------------
def collect_labels(frame: pd.DataFrame, columns=("src", "dst"), sort_nodes: bool = False) -> List[str]:
    """Node labels by first appearance (row by row, src before dst), or sorted."""
    labels = list(pd.unique(frame[list(columns)].to_numpy().ravel())) if len(frame) else []
    return sorted(labels) if sort_nodes else labels


def build_graph(records: Iterable[Tuple[str, str, float, int]], node_labels: Sequence[str],
                options: IngestOptions) -> WeightedGraph:
    """
    Validate (src_label, dst_label, weight, record_number) tuples against a
    fixed node universe and apply the loop and merge policies.
    """
    index = {label: i for i, label in enumerate(node_labels)}
    merged = {}
    for src, dst, weight, record in records:
        if not np.isfinite(weight) or weight <= 0:
            raise GraphFormatError(f"non-positive weight {weight!r} on {src} -> {dst}", record)
        if src == dst:
            if options.drop_loops:
                logger.debug("dropping self-loop on %s (record %s)", src, record)
                continue
            raise GraphFormatError(f"self-loop on node {src!r}", record)
        key = (index[src], index[dst])
        if key in merged:
            if options.merge != "sum":
                raise GraphFormatError(f"duplicate edge {src} -> {dst}", record)
            merged[key] += weight
        else:
            merged[key] = weight
    return WeightedGraph(tuple(node_labels), tuple((s, d, w) for (s, d), w in merged.items()))


def read_records(stream, columns: Sequence[str]) -> pd.DataFrame:
    """
    Read whitespace- or comma-delimited records into a string DataFrame.

    Blank lines and lines starting with '#' or '%' are skipped. A 'record'
    column carries the 1-based source line number. The last column is
    optional (missing -> NaN); any extra field is an error.
    """
    text = stream if isinstance(stream, str) else stream.read()
    kept, numbers = [], []
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line[0] in "#%":
            continue
        kept.append(line)
        numbers.append(number)
    names = list(columns) + ["extra"]
    if not kept:
        return pd.DataFrame(columns=list(columns) + ["record"], dtype=str)

    frame = pd.read_csv(
        io.StringIO("\n".join(kept)),
        sep=_SEPARATOR,
        engine="python",
        header=None,
        names=names,
        index_col=False,
        dtype=str,
    )
    frame["record"] = numbers
    extra = frame["extra"].notna()
    if extra.any():
        raise GraphFormatError("too many fields", int(frame.loc[extra, "record"].iloc[0]))
    missing = frame[list(columns[:-1])].isna().any(axis=1)
    if missing.any():
        raise GraphFormatError("too few fields", int(frame.loc[missing, "record"].iloc[0]))
    return frame.drop(columns="extra")


def numeric_column(frame: pd.DataFrame, column: str, default: Optional[float] = None) -> pd.Series:
    raw = frame[column]
    values = pd.to_numeric(raw, errors="coerce")
    bad = raw.notna() & values.isna()
    if bad.any():
        record = int(frame.loc[bad, "record"].iloc[0])
        raise GraphFormatError(f"{column} {raw[bad].iloc[0]!r} is not a number", record)
    if default is not None:
        values = values.fillna(default)
    elif values.isna().any():
        record = int(frame.loc[values.isna(), "record"].iloc[0])
        raise GraphFormatError(f"missing {column}", record)
    return values.astype(float)


def parse_edge_list(stream, options: IngestOptions = IngestOptions()) -> WeightedGraph:
    """Records 'src dst [weight]'; the weight defaults to 1.0."""
    frame = read_records(stream, ["src", "dst", "weight"])
    weights = numeric_column(frame, "weight", default=1.0)
    labels = collect_labels(frame, sort_nodes=options.sort_nodes)
    records = zip(frame["src"], frame["dst"], weights, frame["record"])
    g = build_graph(records, labels, options)
    logger.info("ingested graph with %d nodes and %d edges", g.n, g.m)
    return g


def read_text(path, what: str = "input") -> str:
    """Whole file as UTF-8 text; unreadable or undecodable files are format errors."""
    try:
        return Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise GraphFormatError(
            f"{what} {path} is not UTF-8 text (byte {exc.start}: {exc.reason})"
        ) from exc
    except OSError as exc:
        raise GraphFormatError(f"cannot read {what} {path}: {exc.strerror or exc}") from exc


def read_edge_list(path, options: IngestOptions = IngestOptions()) -> WeightedGraph:
    return parse_edge_list(read_text(path), options)


def read_matrix_market(path, options: IngestOptions = IngestOptions()) -> WeightedGraph:
    """MatrixMarket (1-based) adjacency; node labels are '1'..'n'."""
    try:
        matrix = scipy.io.mmread(str(path))
    except (ValueError, OSError) as exc:
        raise GraphFormatError(f"cannot read MatrixMarket file {path}: {exc}") from exc
    coo = sp.coo_matrix(matrix)
    if coo.shape[0] != coo.shape[1]:
        raise GraphFormatError(f"adjacency matrix must be square, got {coo.shape}")
    labels = [str(i + 1) for i in range(coo.shape[0])]
    records = (
        (labels[i], labels[j], float(v), k + 1)
        for k, (i, j, v) in enumerate(zip(coo.row, coo.col, coo.data))
    )
    return build_graph(records, labels, options)


def write_matrix_market(g: WeightedGraph, path) -> None:
    scipy.io.mmwrite(str(path), sp.coo_matrix(adjacency(g)), field="real", symmetry="general")


def read_graph(path, options: IngestOptions = IngestOptions()) -> WeightedGraph:
    if Path(path).suffix.lower() == ".mtx":
        return read_matrix_market(path, options)
    return read_edge_list(path, options)


# -------------------------------------------------------------------
# LINE GRAPH DECOMPOSITION
# -------------------------------------------------------------------
@dataclass(frozen=True)
class LineGraphDecomposition:
    graph: WeightedGraph
    A: sp.csr_matrix
    L: sp.csr_matrix
    R: sp.csr_matrix
    Z: sp.csr_matrix
    W: sp.csr_matrix
    B: sp.csr_matrix
    V: sp.csr_matrix
    edge_order: Tuple[Tuple[int, int], ...] = field(default=())

    @property
    def m(self) -> int:
        return self.Z.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.Z.diagonal())

    @property
    def sqrt_Z(self) -> sp.csr_matrix:
        if self.m == 0:
            return sp.csr_matrix((0, 0))
        return sp.diags(self.sqrt_weights, format="csr")


def pattern(X) -> sp.csr_matrix:
    """0/1 matrix marking the stored nonzeros of a nonnegative X."""
    return elementwise_map(X, np.sign)


def incidence_matrices(g: WeightedGraph):
    """Source matrix L, target matrix R and weight matrix Z in edge order."""
    m, n = g.m, g.n
    rows = np.arange(m)
    src = np.array([s for s, _, _ in g.edges], dtype=int)
    dst = np.array([d for _, d, _ in g.edges], dtype=int)
    ones = np.ones(m)
    L = sp.csr_matrix((ones, (rows, src)), shape=(m, n))
    R = sp.csr_matrix((ones, (rows, dst)), shape=(m, n))
    Z = sp.diags(g.weights, format="csr") if m else sp.csr_matrix((0, 0))
    return L, R, Z


def remove_backtracking(W, W_reverse_T) -> sp.csr_matrix:
    """Zero the entries of W where the reversed continuation also exists."""
    return subtract(W, hadamard(W, pattern(hadamard(W, W_reverse_T))))


def line_graph(g: WeightedGraph) -> LineGraphDecomposition:
    A = adjacency(g)
    L, R, Z = incidence_matrices(g)
    W = matmul(matmul(matmul(Z, R), L.T), Z)
    B = remove_backtracking(W, W.T)
    V = sqrt_elementwise(B)

    if (matmul(matmul(L.T, Z), R) != A).nnz:
        raise NumericalError("L^T Z R does not reproduce the adjacency matrix")
    logger.debug("line graph: m=%d, nnz(W)=%d, nnz(B)=%d", g.m, W.nnz, B.nnz)
    return LineGraphDecomposition(
        graph=g, A=A, L=L, R=R, Z=Z, W=W, B=B, V=V,
        edge_order=tuple((s, d) for s, d, _ in g.edges),
    )


def walk_transition_sqrt(d: LineGraphDecomposition) -> sp.csr_matrix:
    """√Z R L^T √Z, which equals W^∘1/2."""
    return matmul(matmul(matmul(d.sqrt_Z, d.R), d.L.T), d.sqrt_Z)
