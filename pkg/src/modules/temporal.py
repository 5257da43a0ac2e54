"""
Temporal networks: a time-ordered sequence of snapshots over one node set.

Edges of all snapshots are stacked into global source/target/weight
matrices, and the global transition matrix M couples edge e (snapshot τ1)
to edge f (snapshot τ2 >= τ1) whenever e's head is f's tail, subject to the
chosen backtracking regime. √Z M^k √Z counts weighted temporal walks of
length k+1, and f-total communicabilities follow the edge-level route.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import scipy.sparse as sp

from config import SOLVE_TOL
from errors import AttenuationRangeError, GraphFormatError, ValidationError
from modules.graph_model import (
    IngestOptions,
    LineGraphDecomposition,
    WeightedGraph,
    adjacency,
    build_graph,
    collect_labels,
    line_graph,
    numeric_column,
    read_records,
    read_text,
    remove_backtracking,
)
from modules.nbt_edge import CoefficientSeries, apply_partial_f
from modules.sparse_core import (
    hadamard,
    identity,
    matmul,
    solve_linear,
    spectral_radius,
    sqrt_elementwise,
    subtract,
)

logger = logging.getLogger(__name__)


# -------------------------------------------------------------------
# TYPES
# -------------------------------------------------------------------
@dataclass(frozen=True)
class TemporalGraph:
    node_labels: Tuple[str, ...]
    snapshots: Tuple[WeightedGraph, ...]
    timestamps: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "node_labels", tuple(self.node_labels))
        object.__setattr__(self, "snapshots", tuple(self.snapshots))
        object.__setattr__(self, "timestamps", tuple(float(s) for s in self.timestamps))
        if len(self.snapshots) != len(self.timestamps):
            raise ValidationError(
                f"{len(self.snapshots)} snapshots but {len(self.timestamps)} timestamps"
            )
        for i, g in enumerate(self.snapshots, start=1):
            if g.node_labels != self.node_labels:
                raise ValidationError(f"snapshot {i} is defined on a different node set")
        if any(b < a for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise ValidationError("timestamps must be non-decreasing")

    @property
    def n(self) -> int:
        return len(self.node_labels)

    @property
    def N(self) -> int:
        return len(self.snapshots)

    @property
    def m_total(self) -> int:
        return sum(g.m for g in self.snapshots)

    def binarized(self) -> "TemporalGraph":
        return TemporalGraph(self.node_labels, tuple(g.binarized() for g in self.snapshots),
                             self.timestamps)

    @classmethod
    def from_matrices(cls, matrices, node_labels: Optional[Sequence[str]] = None,
                      timestamps: Optional[Sequence[float]] = None) -> "TemporalGraph":
        matrices = list(matrices)
        n = matrices[0].shape[0] if matrices else len(node_labels or ())
        labels = tuple(node_labels or (str(i) for i in range(n)))
        snapshots = tuple(WeightedGraph.from_matrix(A, labels) for A in matrices)
        stamps = tuple(timestamps) if timestamps is not None else tuple(range(1, len(matrices) + 1))
        return cls(labels, snapshots, stamps)


class BacktrackRegime(Enum):
    ALLOW_ALL = "allow-all"
    FORBID_SPACE = "forbid-space"
    FORBID_TIME = "forbid-time"
    FORBID_ALL = "forbid-all"

    @property
    def forbid_space(self) -> bool:
        """Reversal within one snapshot is forbidden."""
        return self in (BacktrackRegime.FORBID_SPACE, BacktrackRegime.FORBID_ALL)

    @property
    def forbid_time(self) -> bool:
        """Reversal across two snapshots is forbidden."""
        return self in (BacktrackRegime.FORBID_TIME, BacktrackRegime.FORBID_ALL)


@dataclass(frozen=True)
class GlobalDecomposition:
    graph: TemporalGraph
    regime: BacktrackRegime
    snapshots: Tuple[LineGraphDecomposition, ...]
    L: sp.csr_matrix
    R: sp.csr_matrix
    Z: sp.csr_matrix
    M: sp.csr_matrix
    offsets: Tuple[int, ...]

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def m_total(self) -> int:
        return self.offsets[-1]

    @property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.Z.diagonal())

    @property
    def sqrt_Z(self) -> sp.csr_matrix:
        return sp.diags(self.sqrt_weights, shape=self.Z.shape, format="csr")


# -------------------------------------------------------------------
# INGESTION
# -------------------------------------------------------------------
def read_temporal_edge_list(path, options: IngestOptions = IngestOptions()) -> TemporalGraph:
    """Records 'time src dst [weight]', one snapshot per distinct time value."""
    frame = read_records(read_text(path), ["time", "src", "dst", "weight"])
    frame["time"] = numeric_column(frame, "time")
    weights = numeric_column(frame, "weight", default=1.0)
    labels = collect_labels(frame, sort_nodes=options.sort_nodes)

    snapshots, stamps = [], []
    for stamp in sorted(frame["time"].unique()):
        rows = frame["time"] == stamp
        records = zip(frame.loc[rows, "src"], frame.loc[rows, "dst"],
                      weights[rows], frame.loc[rows, "record"])
        snapshots.append(build_graph(records, labels, options))
        stamps.append(stamp)
    tg = TemporalGraph(tuple(labels), tuple(snapshots), tuple(stamps))
    logger.info("ingested %d snapshots on %d nodes (%d edges)", tg.N, tg.n, tg.m_total)
    return tg


def _read_manifest_entries(path: Path) -> List[Tuple[float, Path]]:
    frame = read_records(read_text(path, what="manifest"), ["first", "second"])
    has_stamp = frame["second"].notna()
    if has_stamp.any() and not has_stamp.all():
        record = int(frame.loc[~has_stamp, "record"].iloc[0])
        raise GraphFormatError("manifest mixes 'timestamp path' and 'path' lines", record)
    if len(frame) and has_stamp.all():
        stamps = numeric_column(frame, "first").tolist()
        files = frame["second"].tolist()
    else:
        stamps = [float(i) for i in range(1, len(frame) + 1)]
        files = frame["first"].tolist()
    for a, b, record in zip(stamps, stamps[1:], frame["record"].iloc[1:]):
        if b < a:
            raise GraphFormatError("manifest timestamps must be non-decreasing", int(record))
    return [(s, (path.parent / f)) for s, f in zip(stamps, files)]


def read_temporal_manifest(path, options: IngestOptions = IngestOptions()) -> TemporalGraph:
    """
    Manifest lines 'timestamp path' or 'path', one snapshot edge list per
    line, in temporal order. Relative paths resolve against the manifest.
    """
    entries = _read_manifest_entries(Path(path))
    frames = []
    for _, snapshot_path in entries:
        text = read_text(snapshot_path, what="snapshot")
        try:
            frame = read_records(text, ["src", "dst", "weight"])
            frame["weight"] = numeric_column(frame, "weight", default=1.0)
        except GraphFormatError as exc:
            raise GraphFormatError(f"{snapshot_path}: {exc}") from exc
        frames.append(frame)

    everything = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=["src", "dst"])
    labels = collect_labels(everything, sort_nodes=options.sort_nodes)
    snapshots = []
    for (_, snapshot_path), frame in zip(entries, frames):
        records = zip(frame["src"], frame["dst"], frame["weight"], frame["record"])
        try:
            snapshots.append(build_graph(records, labels, options))
        except GraphFormatError as exc:
            raise GraphFormatError(f"{snapshot_path}: {exc}") from exc
    tg = TemporalGraph(tuple(labels), tuple(snapshots), tuple(s for s, _ in entries))
    logger.info("ingested %d snapshots on %d nodes (%d edges)", tg.N, tg.n, tg.m_total)
    return tg


# -------------------------------------------------------------------
# GLOBAL MATRICES
# -------------------------------------------------------------------
def global_edge_index(tg: TemporalGraph) -> List[Tuple[int, int, int]]:
    """(snapshot, src, dst) per global edge: snapshot-major, then lexicographic."""
    return [(tau, s, d) for tau, g in enumerate(tg.snapshots) for s, d, _ in g.edges]


def _global_incidence(tg: TemporalGraph):
    index = global_edge_index(tg)
    m, n = len(index), tg.n
    snapshot = np.array([tau for tau, _, _ in index], dtype=int)
    src = np.array([s for _, s, _ in index], dtype=int)
    dst = np.array([d for _, _, d in index], dtype=int)
    weights = np.concatenate([g.weights for g in tg.snapshots]) if m else np.zeros(0)
    rows, ones = np.arange(m), np.ones(m)
    L = sp.csr_matrix((ones, (rows, src)), shape=(m, n))
    R = sp.csr_matrix((ones, (rows, dst)), shape=(m, n))
    Z = sp.diags(weights, shape=(m, m), format="csr")
    return L, R, Z, snapshot


def _cross_block(d1: LineGraphDecomposition, d2: LineGraphDecomposition,
                 forbid_time: bool) -> sp.csr_matrix:
    # W^[τ1,τ2] = Z1 R1 L2^T Z2
    W12 = matmul(matmul(matmul(d1.Z, d1.R), d2.L.T), d2.Z)
    if not forbid_time:
        return W12
    W21 = matmul(matmul(matmul(d2.Z, d2.R), d1.L.T), d1.Z)
    return remove_backtracking(W12, W21.T)


def build_global(tg: TemporalGraph, regime: BacktrackRegime) -> GlobalDecomposition:
    """
    Assemble M block by block: diagonal blocks W^[τ] or B^[τ], blocks above
    the diagonal W^[τ1,τ2] or B^[τ1,τ2], zero below, then the elementwise
    square root of the whole array.
    """
    decompositions = tuple(line_graph(g) for g in tg.snapshots)
    offsets = tuple(np.concatenate([[0], np.cumsum([d.m for d in decompositions])]).astype(int).tolist())
    m_total = offsets[-1]

    rows, cols, vals = [], [], []

    def place(block, tau1, tau2):
        coo = block.tocoo()
        rows.append(coo.row + offsets[tau1])
        cols.append(coo.col + offsets[tau2])
        vals.append(coo.data)

    for tau1, d1 in enumerate(decompositions):
        if d1.m == 0:
            continue
        place(d1.B if regime.forbid_space else d1.W, tau1, tau1)
        for tau2 in range(tau1 + 1, len(decompositions)):
            d2 = decompositions[tau2]
            if d2.m:
                place(_cross_block(d1, d2, regime.forbid_time), tau1, tau2)

    if vals:
        assembled = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(m_total, m_total),
        )
    else:
        assembled = sp.csr_matrix((m_total, m_total))
    M = sqrt_elementwise(assembled)

    L, R, Z, _ = _global_incidence(tg)
    logger.debug("global M (%s): m_total=%d, nnz=%d", regime.value, m_total, M.nnz)
    return GlobalDecomposition(
        graph=tg, regime=regime, snapshots=decompositions,
        L=L, R=R, Z=Z, M=M, offsets=offsets,
    )


def build_M_forbid_all_fast(tg: TemporalGraph) -> sp.csr_matrix:
    """
    M for the regime forbidding all backtracking, from the stacked matrices:
    √Z (𝓡𝓛^T - 𝓡𝓛^T ∘ 𝓛𝓡^T) √Z with everything below the block diagonal zeroed.
    """
    L, R, Z, snapshot = _global_incidence(tg)
    P = matmul(R, L.T)
    M_hat = subtract(P, hadamard(P, matmul(L, R.T)))
    sqrt_Z = sp.diags(np.sqrt(Z.diagonal()), shape=Z.shape, format="csr")
    M_hat = matmul(matmul(sqrt_Z, M_hat), sqrt_Z).tocoo()
    keep = snapshot[M_hat.row] <= snapshot[M_hat.col]
    return sp.csr_matrix((M_hat.data[keep], (M_hat.row[keep], M_hat.col[keep])), shape=M_hat.shape)


def temporal_walk_counts(gd: GlobalDecomposition, k: int) -> sp.csr_matrix:
    """√Z M^k √Z: weighted counts of permitted temporal walks of length k+1."""
    if k < 1:
        raise ValidationError(f"k must be at least 1, got {k}")
    X = gd.sqrt_Z
    for _ in range(k):
        X = matmul(X, gd.M)
    return matmul(X, gd.sqrt_Z)


# -------------------------------------------------------------------
# CENTRALITIES
# -------------------------------------------------------------------
def temporal_f_centrality(gd: GlobalDecomposition, series: CoefficientSeries, t: float,
                          tol: float = SOLVE_TOL) -> np.ndarray:
    """
    v_f(t) = c_0 1 + t 𝓛^T √Z ∂f(tM) √Z 𝓡 1.

    ∂f acts on tM (the series shifted by one, Σ c_{k+1} t^k M^k), so the sum
    over k counts walks of k+1 edges. Gated on t < r/ρ(M).
    """
    rho = spectral_radius(gd.M)
    if gd.m_total == 0:
        if t < 0:
            raise ValidationError(f"t must be nonnegative, got {t}")
        return np.full(gd.n, series.c0)
    w = gd.sqrt_weights
    y = apply_partial_f(series, gd.M, t, w, tol=tol, rho=rho)
    return series.c0 + t * (gd.L.T @ (w * y))


def snapshot_radius(tg: TemporalGraph) -> float:
    """max_τ ρ(A^[τ])."""
    return max((spectral_radius(adjacency(g)) for g in tg.snapshots), default=0.0)


def classical_temporal_katz(tg: TemporalGraph, t: float, tol: float = SOLVE_TOL) -> np.ndarray:
    """x = (I - tA^[1])^{-1} ... (I - tA^[N])^{-1} 1, applied right to left."""
    rho = snapshot_radius(tg)
    upper = np.inf if rho == 0 else 1.0 / rho
    if not 0 <= t < upper:
        raise AttenuationRangeError(t, upper)
    n = tg.n
    x = np.ones(n)
    for g in reversed(tg.snapshots):
        if g.m:
            x = solve_linear(subtract(identity(n), adjacency(g) * t), x, tol=tol)
    return x


# -------------------------------------------------------------------
# RADII AND PERMITTED RANGES
# -------------------------------------------------------------------
@dataclass(frozen=True)
class PermittedRange:
    """Half-open interval [0, upper) with upper = scale/rho."""

    rho: float
    scale: float = 1.0

    @property
    def upper(self) -> float:
        return np.inf if self.rho == 0 else self.scale / self.rho

    def contains(self, t: float) -> bool:
        return 0 <= t < self.upper

    def resolve(self, expression: Union[str, float]) -> float:
        """Absolute t, or a fraction of the upper end written as e.g. '0.95r'."""
        text = str(expression).strip()
        relative = text.endswith("r")
        try:
            value = float(text[:-1] if relative else text)
        except ValueError as exc:
            raise ValidationError(f"cannot parse t expression {text!r}") from exc
        if relative and np.isinf(self.upper):
            raise ValidationError(
                f"t={text} is relative to an infinite radius; give an absolute value"
            )
        t = value * self.upper if relative else value
        if not self.contains(t):
            raise AttenuationRangeError(t, self.upper)
        return t


@dataclass(frozen=True)
class TemporalRadii:
    rho_M: float
    max_block_rho: float


def temporal_radii(gd: GlobalDecomposition) -> TemporalRadii:
    """ρ(M), and max_τ ρ(C^[τ]) taken without the elementwise square root."""
    blocks = [d.B if gd.regime.forbid_space else d.W for d in gd.snapshots]
    return TemporalRadii(
        rho_M=spectral_radius(gd.M),
        max_block_rho=max((spectral_radius(C) for C in blocks), default=0.0),
    )


def permitted_t_range(tg: TemporalGraph, regime: Optional[BacktrackRegime] = None,
                      classical: bool = False) -> PermittedRange:
    """[0, 1/ρ(M)) for a backtracking regime, [0, 1/max_τ ρ(A^[τ])) when classical."""
    if classical:
        return PermittedRange(snapshot_radius(tg))
    if regime is None:
        raise ValidationError("permitted_t_range needs a regime unless classical=True")
    return PermittedRange(spectral_radius(build_global(tg, regime).M))
