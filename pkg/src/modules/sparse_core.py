"""
Sparse matrix kernel: products, Hadamard operations, elementwise maps,
linear solves and spectral radii on nonnegative matrices.

scipy.sparse.csr_matrix is the matrix carrier and numpy.ndarray the vector
carrier. No function mutates its arguments.
"""

import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from config import (
    DENSE_THRESHOLD,
    ITERATIVE_CAP_FACTOR,
    POWER_MAX_ITER,
    POWER_TOL,
    SOLVE_TOL,
)
from errors import (
    DimensionError,
    ElementwisePoleError,
    SolverError,
    SpectralRadiusError,
    ValidationError,
)

logger = logging.getLogger(__name__)


# -------------------------------------------------------------------
# CONSTRUCTION HELPERS
# -------------------------------------------------------------------
def as_csr(X) -> sp.csr_matrix:
    """Return a float CSR copy of X with duplicates summed and explicit zeros dropped."""
    if sp.issparse(X):
        out = sp.csr_matrix(X, dtype=float, copy=True)
    else:
        out = sp.csr_matrix(np.atleast_2d(np.asarray(X, dtype=float)))
    out.sum_duplicates()
    out.eliminate_zeros()
    return out


def _csr(X) -> sp.csr_matrix:
    # read-only view when X already is a float CSR matrix
    if isinstance(X, sp.csr_matrix) and X.dtype == np.float64:
        return X
    return as_csr(X)


def identity(n: int) -> sp.csr_matrix:
    return sp.identity(n, dtype=float, format="csr")


def zeros(nrows: int, ncols: int) -> sp.csr_matrix:
    return sp.csr_matrix((nrows, ncols), dtype=float)


def diagonal_part(X) -> sp.csr_matrix:
    """dd(X): the diagonal matrix carrying the diagonal of X."""
    X = _csr(X)
    return sp.diags(X.diagonal(), shape=X.shape, format="csr")


def to_dense(X) -> np.ndarray:
    if sp.issparse(X):
        return X.toarray()
    return np.asarray(X, dtype=float)


def max_abs_deviation(X, Y) -> float:
    diff = to_dense(X) - to_dense(Y)
    return float(np.abs(diff).max()) if diff.size else 0.0


def _check_same_shape(A, B, op):
    if A.shape != B.shape:
        raise DimensionError(f"{op}: shapes {A.shape} and {B.shape} differ")


# -------------------------------------------------------------------
# PRODUCTS
# -------------------------------------------------------------------
def matmul(A, B) -> sp.csr_matrix:
    A, B = _csr(A), _csr(B)
    if A.shape[1] != B.shape[0]:
        raise DimensionError(f"matmul: inner dimensions {A.shape} @ {B.shape} disagree")
    out = sp.csr_matrix(A @ B)
    out.eliminate_zeros()
    return out


def hadamard(A, B) -> sp.csr_matrix:
    A, B = _csr(A), _csr(B)
    _check_same_shape(A, B, "hadamard")
    out = sp.csr_matrix(A.multiply(B))
    out.eliminate_zeros()
    return out


def subtract(A, B) -> sp.csr_matrix:
    """A - B with explicit zeros dropped."""
    A, B = _csr(A), _csr(B)
    _check_same_shape(A, B, "subtract")
    out = sp.csr_matrix(A - B)
    out.eliminate_zeros()
    return out


# -------------------------------------------------------------------
# ELEMENTWISE MAPS
# -------------------------------------------------------------------
def _entry_of(X: sp.csr_matrix, position: int):
    row = int(np.searchsorted(X.indptr, position, side="right") - 1)
    return row, int(X.indices[position])


def elementwise_map(A, f, dense: bool = False) -> sp.csr_matrix:
    """
    Apply the vectorised scalar function f entrywise.

    With dense=False f touches stored entries only, so f(0) must be 0.
    A non-finite value anywhere raises ElementwisePoleError naming the entry.
    """
    X = _csr(A)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if dense:
            values = np.asarray(f(X.toarray()), dtype=float)
            bad = np.argwhere(~np.isfinite(values))
            if bad.size:
                i, j = (int(v) for v in bad[0])
                raise ElementwisePoleError(f"elementwise pole at entry ({i}, {j})", entry=(i, j))
            return as_csr(values)

        if np.asarray(f(np.zeros(1)), dtype=float)[0] != 0.0:
            raise ValidationError("elementwise_map: f(0) != 0, request dense application")
        out = X.copy()
        out.data = np.asarray(f(out.data), dtype=float)

    bad = np.flatnonzero(~np.isfinite(out.data))
    if bad.size:
        entry = _entry_of(out, int(bad[0]))
        raise ElementwisePoleError(f"elementwise pole at entry {entry}", entry=entry)
    out.eliminate_zeros()
    return out


def sqrt_elementwise(A) -> sp.csr_matrix:
    """X^∘1/2, the elementwise nonnegative square root."""
    X = _csr(A)
    if X.nnz and X.data.min() < 0:
        raise ValidationError("elementwise square root of a matrix with negative entries")
    return elementwise_map(X, np.sqrt)


def elementwise_power(A, p: int) -> sp.csr_matrix:
    return elementwise_map(A, lambda x: np.power(x, p))


def drop_small(X, scale, rel: float = 1e-13) -> sp.csr_matrix:
    """
    Zero entries of X whose magnitude is within rel of the nonnegative
    scale matrix. Used after subtractions whose exact result is zero.
    """
    X, scale = _csr(X), _csr(scale)
    _check_same_shape(X, scale, "drop_small")
    keep = abs(X) > scale * rel
    out = sp.csr_matrix(X.multiply(keep))
    out.eliminate_zeros()
    return out


# -------------------------------------------------------------------
# LINEAR SOLVES
# -------------------------------------------------------------------
def _relative_residual(M, x, b) -> float:
    r = M @ x - b
    return float(np.linalg.norm(r) / np.linalg.norm(b))


def _iterative_solve(M: sp.csr_matrix, b: np.ndarray, tol: float) -> np.ndarray:
    n = M.shape[0]
    try:
        ilu = spla.spilu(M.tocsc())
        precond = spla.LinearOperator(M.shape, ilu.solve)
    except RuntimeError:
        precond = None
    x, info = spla.bicgstab(M, b, rtol=tol, atol=0.0, maxiter=ITERATIVE_CAP_FACTOR * n, M=precond)
    if info != 0:
        logger.debug("bicgstab returned info=%s", info)
    return x


def solve_linear(M, b, tol: float = SOLVE_TOL, dense_threshold: int = DENSE_THRESHOLD) -> np.ndarray:
    """
    Solve Mx = b so that ||Mx - b|| <= tol ||b||.

    Dense LU for n <= dense_threshold, preconditioned BiCGSTAB otherwise.
    b may be 2-D, in which case each column is solved and checked.
    """
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"solve_linear: matrix {M.shape} is not square")
    b = np.asarray(b, dtype=float)
    n = M.shape[0]
    if b.shape[0] != n:
        raise DimensionError(f"solve_linear: right-hand side of length {b.shape[0]} for n={n}")
    if n == 0 or not np.any(b):
        return np.zeros_like(b)

    if n <= dense_threshold:
        dense = to_dense(M)
        try:
            x = np.linalg.solve(dense, b)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular system: {exc}") from exc
        check = dense
    else:
        Ms = _csr(M)
        if b.ndim == 1:
            x = _iterative_solve(Ms, b, tol)
        else:
            x = np.column_stack([_iterative_solve(Ms, b[:, j], tol) for j in range(b.shape[1])])
        check = Ms

    if not np.all(np.isfinite(x)):
        raise SolverError("solver produced non-finite values")
    columns = [slice(None)] if b.ndim == 1 else [(slice(None), j) for j in range(b.shape[1])]
    residual = 0.0
    for col in columns:
        if np.any(b[col]):
            residual = max(residual, _relative_residual(check, x[col], b[col]))
    if not residual <= tol:
        raise SolverError(
            f"relative residual {residual:.3e} exceeds tolerance {tol:.1e}", residual=residual
        )
    logger.debug("solve_linear n=%d residual=%.2e", n, residual)
    return x


# -------------------------------------------------------------------
# SPECTRAL RADIUS
# -------------------------------------------------------------------
def _irreducible_radius(block: sp.csr_matrix, tol: float, max_iter: int) -> float:
    # Shifted power iteration; the shift makes the Perron root strictly dominant.
    # Collatz-Wielandt: min(y/x) <= rho + shift <= max(y/x) for every positive x.
    n = block.shape[0]
    shift = float(np.asarray(block.sum(axis=1)).mean())
    x = np.ones(n)
    lo, hi = 0.0, np.inf
    estimate = shift
    for it in range(1, max_iter + 1):
        y = block @ x + shift * x
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = y / x
        lo = max(lo, float(np.nanmin(ratios)))
        hi = min(hi, float(np.nanmax(ratios)))
        estimate = max(0.5 * (lo + hi) - shift, 0.0)
        if hi - lo <= tol * estimate:
            logger.debug("power iteration on %d-block converged in %d steps", n, it)
            return estimate
        x = y / y.max()
    raise SpectralRadiusError(
        f"power iteration did not converge in {max_iter} steps (last estimate {estimate:.6g})",
        estimate=estimate,
    )


def spectral_radius(M, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> float:
    """
    rho(M) for an elementwise nonnegative square matrix.

    The pattern is split into strongly connected components; a component of
    one node contributes its diagonal entry, larger components go through
    shifted power iteration. A matrix with only trivial components is
    nilpotent and gets 0.
    """
    X = _csr(M)
    if X.shape[0] != X.shape[1]:
        raise DimensionError(f"spectral_radius: matrix {X.shape} is not square")
    if X.nnz == 0:
        return 0.0
    if X.data.min() < 0:
        raise ValidationError("spectral_radius expects an elementwise nonnegative matrix")

    n_comp, labels = connected_components(X, directed=True, connection="strong")
    sizes = np.bincount(labels, minlength=n_comp)
    diagonal = X.diagonal()

    rho = 0.0
    singletons = sizes[labels] == 1
    if np.any(singletons):
        rho = float(diagonal[singletons].max())

    order = np.argsort(labels, kind="stable")
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    for comp in np.flatnonzero(sizes > 1):
        idx = order[bounds[comp]:bounds[comp + 1]]
        block = X[idx][:, idx]
        rho = max(rho, _irreducible_radius(block, tol, max_iter))
    return rho
