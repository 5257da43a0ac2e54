"""
Node-level route: the growing recurrence for p_k(A), the matrix Ψ(t) whose
inverse is the generating function Φ(t) = Σ t^k p_k(A), and the
non-backtracking Katz centrality obtained from one linear solve with Ψ(t).
"""

import logging
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from config import DENSE_THRESHOLD, SOLVE_TOL
from errors import (
    AttenuationRangeError,
    ElementwisePoleError,
    RadiusUncheckedWarning,
    ValidationError,
)
from modules.sparse_core import (
    as_csr,
    diagonal_part,
    drop_small,
    elementwise_map,
    hadamard,
    identity,
    matmul,
    solve_linear,
    spectral_radius,
    sqrt_elementwise,
    subtract,
    to_dense,
)

logger = logging.getLogger(__name__)


def f1(x):
    return x / (1.0 - x)


def f2(x):
    return x / (1.0 + x)


@dataclass(frozen=True)
class NbtNodeSystem:
    A: sp.csr_matrix
    S: sp.csr_matrix
    Q: sp.csr_matrix
    t: float
    Psi: sp.csr_matrix


def reciprocal_part(A) -> sp.csr_matrix:
    """S = A ∘ A^T, nonzero exactly on reciprocated edge pairs."""
    A = as_csr(A)
    return hadamard(A, A.T)


# -------------------------------------------------------------------
# RECURRENCE
# -------------------------------------------------------------------
def pk_recurrence(A, kmax: int) -> List[sp.csr_matrix]:
    """
    [p_0, ..., p_kmax] from the k-term recurrence

        p_k = Σ_{ℓ=2h+1 ≤ k} (A ∘ S^∘h) p_{k-ℓ} - Σ_{ℓ=2h, 2 ≤ ℓ ≤ k} dd((A^∘h)^2) p_{k-ℓ}

    using A^∘(h+1) ∘ (A^T)^∘h = A ∘ S^∘h and dd((A^∘h)^2) = diag(S^∘h 1).
    Each new h costs one Hadamard product.
    """
    if kmax < 0:
        raise ValidationError(f"kmax must be nonnegative, got {kmax}")
    A = as_csr(A)
    n = A.shape[0]
    p = [identity(n)]
    if kmax == 0:
        return p
    p.append(A)

    S = reciprocal_part(A)
    odd = [A]
    even = [None]
    s_power = None
    for k in range(2, kmax + 1):
        while len(odd) <= (k - 1) // 2:
            odd.append(hadamard(odd[-1], S))
        while len(even) <= k // 2:
            s_power = S if s_power is None else hadamard(s_power, S)
            even.append(sp.diags(np.asarray(s_power.sum(axis=1)).ravel(), shape=(n, n), format="csr"))

        positive = sp.csr_matrix((n, n))
        for h in range((k - 1) // 2 + 1):
            positive = positive + matmul(odd[h], p[k - 2 * h - 1])
        negative = sp.csr_matrix((n, n))
        for h in range(1, k // 2 + 1):
            negative = negative + matmul(even[h], p[k - 2 * h])

        p.append(drop_small(subtract(positive, negative), positive + negative))
    return p


def truncated_phi(p_list: Sequence, t: float) -> np.ndarray:
    """Σ_k t^k p_k over the supplied terms."""
    total = np.zeros(p_list[0].shape)
    for k, pk in enumerate(p_list):
        total += (t ** k) * to_dense(pk)
    return total


# -------------------------------------------------------------------
# Ψ(t) AND Φ(t)
# -------------------------------------------------------------------
def _pole_check(S: sp.csr_matrix, t: float, node_labels: Optional[Sequence[str]]):
    if S.nnz == 0:
        return
    coo = S.tocoo()
    worst = int(np.argmax(coo.data))
    if t * t * coo.data[worst] >= 1.0:
        i, j = int(coo.row[worst]), int(coo.col[worst])
        edge = (node_labels[i], node_labels[j]) if node_labels else (i, j)
        limit = 1.0 / np.sqrt(coo.data[worst])
        raise ElementwisePoleError(
            f"elementwise pole on reciprocated edge {edge[0]} <-> {edge[1]}: "
            f"t={t!r} needs t < {limit:.12g}",
            entry=edge,
        )


def assemble_psi(A, t: float, node_labels: Optional[Sequence[str]] = None) -> NbtNodeSystem:
    """
    Ψ(t) = I + dd[f1(∘tQ) f2(∘tQ)] - tA ∘/ (11^T - t^2 S).

    The division only touches the pattern of A and is written as
    tA + tA ∘ f1(∘t^2 S), so no dense intermediate appears.
    """
    if t < 0:
        raise ValidationError(f"t must be nonnegative, got {t}")
    A = as_csr(A)
    n = A.shape[0]
    S = reciprocal_part(A)
    Q = sqrt_elementwise(S)
    _pole_check(S, t, node_labels)

    tQ = Q * t
    F1 = elementwise_map(tQ, f1)
    F2 = elementwise_map(tQ, f2)
    correction = np.asarray(hadamard(F1, F2.T).sum(axis=1)).ravel()
    off_diagonal = A * t + hadamard(A * t, elementwise_map(S * (t * t), f1))
    Psi = subtract(identity(n) + sp.diags(correction, shape=(n, n), format="csr"), off_diagonal)
    return NbtNodeSystem(A=A, S=S, Q=Q, t=float(t), Psi=Psi)


def check_nbt_radius(t: float, decomposition=None) -> None:
    """Validate t against 1/ρ(V) when a line-graph decomposition is at hand."""
    if decomposition is None:
        warnings.warn(
            "t checked against the elementwise pole condition only; "
            "pass a line-graph decomposition to certify the convergence radius",
            RadiusUncheckedWarning,
            stacklevel=3,
        )
        return
    from modules.nbt_edge import convergence_radius

    radius = convergence_radius(decomposition)
    if not t < radius:
        raise AttenuationRangeError(t, radius)


def phi_dense(A, t: float, decomposition=None, dense_threshold: int = DENSE_THRESHOLD) -> np.ndarray:
    """Φ(t) = Ψ(t)^{-1} as a dense matrix."""
    A = as_csr(A)
    n = A.shape[0]
    if n > dense_threshold:
        raise ValidationError(f"phi_dense needs n <= {dense_threshold}, got n={n}")
    check_nbt_radius(t, decomposition)
    system = assemble_psi(A, t)
    return solve_linear(system.Psi, np.eye(n), dense_threshold=dense_threshold)


def nbt_katz(A, t: float, tol: float = SOLVE_TOL, decomposition=None,
             node_labels: Optional[Sequence[str]] = None) -> np.ndarray:
    """Non-backtracking Katz centrality x = Φ(t)1, from Ψ(t) x = 1."""
    check_nbt_radius(t, decomposition)
    system = assemble_psi(A, t, node_labels)
    n = system.A.shape[0]
    x = solve_linear(system.Psi, np.ones(n), tol=tol)
    if n and x.min() < 1.0 - np.sqrt(tol):
        logger.warning("NBT Katz score %.6g below 1: t=%g is likely outside the convergence radius",
                       x.min(), t)
    return x


def nbt_subgraph_centrality(A, t: float, decomposition=None) -> np.ndarray:
    """diag Φ(t): weighted closed NBT walks at each node."""
    return np.diag(phi_dense(A, t, decomposition)).copy()


# -------------------------------------------------------------------
# CLASSICAL AND CLOSED-FORM REFERENCES
# -------------------------------------------------------------------
def katz_centrality(A, t: float, tol: float = SOLVE_TOL, rho: Optional[float] = None) -> np.ndarray:
    """Classical Katz x = (I - tA)^{-1} 1 for 0 <= t < 1/ρ(A)."""
    A = as_csr(A)
    rho = spectral_radius(A) if rho is None else rho
    upper = np.inf if rho == 0 else 1.0 / rho
    if not 0 <= t < upper:
        raise AttenuationRangeError(t, upper)
    n = A.shape[0]
    return solve_linear(subtract(identity(n), A * t), np.ones(n), tol=tol)


def phi_binary_closed_form(A, t: float) -> np.ndarray:
    """
    Φ(t) = (1 - t^2)(I - tA + t^2(D - I) + t^3(A - S))^{-1} for a 0/1 matrix A,
    with D = dd(A^2). On symmetric A the cubic term vanishes.
    """
    A = as_csr(A)
    if A.nnz and not np.all(A.data == 1.0):
        raise ValidationError("closed form applies to unweighted (0/1) adjacency matrices only")
    n = A.shape[0]
    I = np.eye(n)
    D = to_dense(diagonal_part(matmul(A, A)))
    Ad = to_dense(A)
    Sd = to_dense(reciprocal_part(A))
    K = I - t * Ad + t * t * (D - I) + t ** 3 * (Ad - Sd)
    return (1.0 - t * t) * solve_linear(K, I)
