import numpy as np
import pytest
import scipy.sparse as sp

from errors import DimensionError, ElementwisePoleError, SolverError, ValidationError
from modules.sparse_core import (
    as_csr,
    diagonal_part,
    drop_small,
    elementwise_map,
    hadamard,
    matmul,
    solve_linear,
    spectral_radius,
    sqrt_elementwise,
    subtract,
)


# ---------- spectral radius ----------

def test_spectral_radius_symmetric_pair():
    assert spectral_radius(np.array([[0.0, 2.0], [2.0, 0.0]])) == pytest.approx(2.0, rel=1e-12)


def test_spectral_radius_weighted_cycle():
    s2, s6, s3 = np.sqrt([2.0, 6.0, 3.0])
    V = np.array([[0, s2, 0], [0, 0, s6], [s3, 0, 0]])
    assert spectral_radius(V) == pytest.approx(6 ** (1 / 3), rel=1e-7)


def test_spectral_radius_nilpotent_is_zero():
    V = sp.csr_matrix(np.triu(np.ones((4, 4)), k=1))
    assert spectral_radius(V) == 0.0


def test_spectral_radius_reducible_uses_diagonal_of_singletons():
    assert spectral_radius(np.array([[3.0, 1.0], [0.0, 1.0]])) == pytest.approx(3.0)


def test_spectral_radius_matches_dense_eigenvalues(rng):
    for _ in range(20):
        n = int(rng.integers(2, 8))
        X = rng.uniform(0, 1, (n, n)) * (rng.random((n, n)) < 0.4)
        expected = np.abs(np.linalg.eigvals(X)).max()
        assert spectral_radius(X) == pytest.approx(expected, rel=1e-6, abs=1e-12)


def test_spectral_radius_rejects_negative_entries():
    with pytest.raises(ValidationError):
        spectral_radius(np.array([[0.0, -1.0], [1.0, 0.0]]))


# ---------- linear solves ----------

def test_solve_linear_small_system():
    x = solve_linear(np.array([[1.0, -0.2], [-0.2, 1.0]]), np.ones(2))
    np.testing.assert_allclose(x, [1.25, 1.25], rtol=1e-12)


def test_solve_linear_singular_raises():
    with pytest.raises(SolverError):
        solve_linear(np.array([[1.0, 1.0], [1.0, 1.0]]), np.ones(2))


def test_solve_linear_iterative_path_matches_dense(rng):
    n = 60
    M = sp.random(n, n, density=0.1, random_state=3, format="csr") * 0.1
    M = sp.identity(n, format="csr") * 2.0 + M
    b = rng.uniform(0.5, 1.5, n)
    x = solve_linear(M, b, tol=1e-12, dense_threshold=1)
    np.testing.assert_allclose(x, np.linalg.solve(M.toarray(), b), rtol=1e-9)


def test_solve_linear_matrix_right_hand_side():
    M = np.array([[2.0, 0.0], [1.0, 1.0]])
    X = solve_linear(M, np.eye(2))
    np.testing.assert_allclose(X, np.linalg.inv(M), rtol=1e-12)


def test_solve_linear_zero_rhs_and_empty():
    np.testing.assert_array_equal(solve_linear(np.eye(3), np.zeros(3)), np.zeros(3))
    assert solve_linear(sp.csr_matrix((0, 0)), np.zeros(0)).shape == (0,)


# ---------- elementwise and products ----------

def test_elementwise_map_reports_pole_entry():
    X = sp.csr_matrix(np.array([[0.0, 1.0], [0.5, 0.0]]))
    with pytest.raises(ElementwisePoleError) as info:
        elementwise_map(X, lambda x: x / (1.0 - x))
    assert info.value.entry == (0, 1)


def test_elementwise_map_requires_zero_preserving_function():
    with pytest.raises(ValidationError):
        elementwise_map(np.eye(2), np.exp)
    dense = elementwise_map(np.eye(2), np.exp, dense=True)
    assert dense[0, 1] == pytest.approx(1.0)


def test_sqrt_elementwise_rejects_negative():
    with pytest.raises(ValidationError):
        sqrt_elementwise(np.array([[0.0, -4.0], [1.0, 0.0]]))


def test_shape_checks():
    with pytest.raises(DimensionError):
        hadamard(np.eye(2), np.eye(3))
    with pytest.raises(DimensionError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))
    with pytest.raises(DimensionError):
        subtract(np.eye(2), np.eye(3))


def test_drop_small_removes_cancellation_residue():
    X = as_csr(np.array([[1e-17, 1.0]]))
    cleaned = drop_small(X, np.array([[1.0, 1.0]]))
    assert cleaned.nnz == 1
    assert cleaned[0, 1] == 1.0


def test_diagonal_part_and_as_csr_drop_zeros():
    X = np.array([[1.0, 2.0], [0.0, 3.0]])
    np.testing.assert_array_equal(diagonal_part(X).toarray(), np.diag([1.0, 3.0]))
    assert as_csr(np.zeros((2, 2))).nnz == 0
