"""
Edge-level route through the weighted line graph.

Walk counts and p_k(A) are recovered by projecting powers of W^∘1/2 and
V = B^∘1/2 back to the nodes with L^T √Z (...) √Z R. General f-weighted
centralities use the shifted operator ∂f(x) = Σ c_{k+1} x^k = (f(x) - c_0)/x
applied to a vector, so (I - tV) is never inverted.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

from config import RADIUS_INFLATION, SERIES_MAX_TERMS, SOLVE_TOL
from errors import AttenuationRangeError, TruncationError, ValidationError
from modules.graph_model import LineGraphDecomposition, walk_transition_sqrt
from modules.sparse_core import (
    as_csr,
    identity,
    matmul,
    solve_linear,
    spectral_radius,
    subtract,
)

logger = logging.getLogger(__name__)

SERIES_KINDS = ("resolvent", "exponential", "custom")


# -------------------------------------------------------------------
# COEFFICIENT SERIES
# -------------------------------------------------------------------
@dataclass(frozen=True)
class CoefficientSeries:
    """
    f(x) = Σ c_k x^k with nonnegative coefficients and scalar radius r.

    Custom series are finite (c_0..c_K) and carry the caller's bound on
    the neglected tail.
    """

    kind: str
    radius: float
    coefficients: Tuple[float, ...] = ()
    tail_bound: float = 0.0

    def __post_init__(self):
        if self.kind not in SERIES_KINDS:
            raise ValidationError(f"unknown series kind {self.kind!r} (use one of {SERIES_KINDS})")
        if not self.radius > 0:
            raise ValidationError(f"series radius must be positive, got {self.radius!r}")
        if self.kind == "custom":
            if not self.coefficients:
                raise ValidationError("custom series needs at least one coefficient")
            if any(not np.isfinite(c) or c < 0 for c in self.coefficients):
                raise ValidationError("series coefficients must be finite and nonnegative")
            if not self.tail_bound >= 0:
                raise ValidationError(f"tail bound must be nonnegative, got {self.tail_bound!r}")

    @classmethod
    def resolvent(cls) -> "CoefficientSeries":
        return cls(kind="resolvent", radius=1.0)

    @classmethod
    def exponential(cls) -> "CoefficientSeries":
        return cls(kind="exponential", radius=np.inf)

    @classmethod
    def custom(cls, coefficients: Sequence[float], tail_bound: float = 0.0,
               radius: float = np.inf) -> "CoefficientSeries":
        return cls(kind="custom", radius=float(radius),
                   coefficients=tuple(float(c) for c in coefficients),
                   tail_bound=float(tail_bound))

    def coefficient(self, k: int) -> float:
        if k < 0:
            raise ValidationError(f"coefficient index must be nonnegative, got {k}")
        if self.kind == "resolvent":
            return 1.0
        if self.kind == "exponential":
            return float(np.exp(-gammaln(k + 1)))
        return self.coefficients[k] if k < len(self.coefficients) else 0.0

    @property
    def c0(self) -> float:
        return self.coefficient(0)


def _radius_check(series: CoefficientSeries, t: float, rho: float) -> None:
    if t < 0:
        raise ValidationError(f"t must be nonnegative, got {t}")
    upper = np.inf if rho == 0 else series.radius / rho
    if not t < upper:
        raise AttenuationRangeError(t, upper)


def _exponential_order(x: float, tol: float) -> int:
    """Smallest K with Σ_{k>K} x^k/(k+1)! <= tol, from a geometric tail bound."""
    K = 0
    term = x / 2.0  # x^(K+1)/(K+2)!
    while not (x < K + 3 and term / (1.0 - x / (K + 3)) <= tol):
        K += 1
        term *= x / (K + 2)
        if K > SERIES_MAX_TERMS:
            raise TruncationError(
                f"exponential series needs more than {SERIES_MAX_TERMS} terms at x={x:.6g}"
            )
    return K


def apply_partial_f(series: CoefficientSeries, M, t: float, w, tol: float = SOLVE_TOL,
                    rho: Optional[float] = None) -> np.ndarray:
    """
    y ≈ ∂f(tM) w with ||error|| <= tol ||w||.

    The resolvent is a fixed point of ∂, so that case is one solve with
    (I - tM). The exponential is summed with an a-priori truncation order and
    then until the last term drops below tol ||w||. Custom series are
    summed exactly up to their last coefficient.
    """
    M = as_csr(M)
    w = np.asarray(w, dtype=float)
    if rho is None:
        rho = spectral_radius(M)
    _radius_check(series, t, rho)
    m = M.shape[0]
    if m == 0 or not np.any(w):
        return np.zeros_like(w)

    if series.kind == "resolvent":
        return solve_linear(subtract(identity(m), M * t), w, tol=tol)

    if series.kind == "custom":
        if series.tail_bound > tol:
            raise TruncationError(
                f"declared tail bound {series.tail_bound:.3g} exceeds tolerance {tol:.3g}"
            )
        y = np.zeros_like(w)
        power = w.copy()
        for k in range(len(series.coefficients) - 1):
            y += series.coefficients[k + 1] * power
            power = t * (M @ power)
        return y

    K = _exponential_order(RADIUS_INFLATION * t * rho, tol)
    threshold = tol * np.linalg.norm(w)
    term = w.copy()  # (tM)^k w / (k+1)!
    y = term.copy()
    k = 0
    while k < K or np.linalg.norm(term) > threshold:
        k += 1
        if k > SERIES_MAX_TERMS:
            raise TruncationError(
                f"exponential series did not reach tolerance {tol:.1e} in {SERIES_MAX_TERMS} terms"
            )
        term = t * (M @ term) / (k + 1)
        y += term
    logger.debug("exponential ∂f summed with %d terms (a-priori order %d)", k + 1, K)
    return y


# -------------------------------------------------------------------
# PROJECTIONS
# -------------------------------------------------------------------
def _project(d: LineGraphDecomposition, T: sp.csr_matrix, k: int) -> sp.csr_matrix:
    if k < 0:
        raise ValidationError(f"k must be nonnegative, got {k}")
    X = matmul(d.sqrt_Z, d.R)
    for _ in range(k):
        X = matmul(T, X)
    return matmul(matmul(d.L.T, d.sqrt_Z), X)


def project_walk_counts(d: LineGraphDecomposition, k: int) -> sp.csr_matrix:
    """L^T √Z (W^∘1/2)^k √Z R, which equals A^(k+1)."""
    return _project(d, walk_transition_sqrt(d), k)


def project_pk(d: LineGraphDecomposition, k: int) -> sp.csr_matrix:
    """L^T √Z V^k √Z R, which equals p_{k+1}(A)."""
    return _project(d, d.V, k)


# -------------------------------------------------------------------
# RADII
# -------------------------------------------------------------------
def convergence_radius(d: LineGraphDecomposition) -> float:
    """1/ρ(V); infinite when V is nilpotent."""
    rho = spectral_radius(d.V)
    return np.inf if rho == 0 else 1.0 / rho


def line_walk_radius(d: LineGraphDecomposition) -> float:
    return spectral_radius(walk_transition_sqrt(d))


# -------------------------------------------------------------------
# CENTRALITY
# -------------------------------------------------------------------
@dataclass(frozen=True)
class EdgeCentralityPlan:
    decomposition: LineGraphDecomposition
    series: CoefficientSeries
    t: float
    rho_V: float

    @classmethod
    def build(cls, decomposition: LineGraphDecomposition, series: CoefficientSeries,
              t: float) -> "EdgeCentralityPlan":
        # t < r/ρ(V) for every kind; exact for the resolvent, conservative for custom series
        rho_V = spectral_radius(decomposition.V)
        _radius_check(series, t, rho_V)
        return cls(decomposition=decomposition, series=series, t=float(t), rho_V=rho_V)


def edge_centrality(plan: EdgeCentralityPlan, tol: float = SOLVE_TOL) -> np.ndarray:
    """v = c_0 1 + t L^T √Z ∂f(tV) √Z R 1, matrix-free."""
    d, series, t = plan.decomposition, plan.series, plan.t
    if d.m == 0:
        return np.full(d.n, series.c0)
    # R 1 = 1 on edges, so √Z R 1 is the vector of square-rooted weights
    w = d.sqrt_weights
    y = apply_partial_f(series, d.V, t, w, tol=tol, rho=plan.rho_V)
    return series.c0 + t * (d.L.T @ (w * y))


def phi_via_linegraph(d: LineGraphDecomposition, t: float, tol: float = SOLVE_TOL) -> np.ndarray:
    """Φ(t) = I + t L^T √Z (I - tV)^{-1} √Z R, solved column by column."""
    radius = convergence_radius(d)
    if not 0 <= t < radius:
        raise AttenuationRangeError(t, radius)
    n, m = d.n, d.m
    if m == 0:
        return np.eye(n)
    rhs = matmul(d.sqrt_Z, d.R).toarray()
    X = solve_linear(subtract(identity(m), d.V * t), rhs, tol=tol)
    return np.eye(n) + t * (d.L.T @ (d.sqrt_weights[:, None] * X))
