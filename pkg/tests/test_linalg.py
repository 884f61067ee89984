import numpy as np
import pytest

from sketchnewton.errors import BadSubset, NoConvergence, NonFinite, NonSymmetric
from sketchnewton.linalg import (PsdSolver, SparseMatrix, lambda_max,
                                 lambda_min_nonzero, solve_least_norm_psd)


class TestSolveLeastNormPsd:
    def test_identity(self):
        assert np.allclose(solve_least_norm_psd(np.eye(2), np.array([3.0, -1.0])),
                           [3.0, -1.0])

    def test_singular_diagonal_matches_eigendecomposition_oracle(self):
        M = np.diag([2.0, 0.0])
        b = np.array([4.0, 5.0])
        # oracle: invert only the nonzero eigenvalue
        evals, evecs = np.linalg.eigh(M)
        inv = np.where(evals > 1e-12 * evals.max(), 1.0 / np.where(evals > 0, evals, 1.0), 0.0)
        oracle = evecs @ (inv * (evecs.T @ b))
        got = solve_least_norm_psd(M, b)
        assert np.allclose(got, oracle)
        assert np.allclose(got, [2.0, 0.0])

    def test_zero_matrix(self):
        assert np.allclose(solve_least_norm_psd(np.zeros((2, 2)), np.array([7.0, 7.0])),
                           [0.0, 0.0])

    def test_non_symmetric_rejected(self):
        with pytest.raises(NonSymmetric):
            solve_least_norm_psd(np.array([[1.0, 2.0], [0.0, 1.0]]), np.array([1.0, 1.0]))

    def test_non_finite_rejected(self):
        with pytest.raises(NonFinite):
            solve_least_norm_psd(np.array([[np.nan, 0.0], [0.0, 1.0]]), np.array([1.0, 1.0]))
        with pytest.raises(NonFinite):
            solve_least_norm_psd(np.eye(2), np.array([np.inf, 0.0]))

    def test_pseudoinverse_properties_on_random_rank_deficient(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            tau = int(rng.integers(2, 9))
            r = int(rng.integers(1, tau + 1))
            G = rng.standard_normal((tau, r))
            M = G @ G.T
            b = rng.standard_normal(tau)
            v = solve_least_norm_psd(M, b)
            # M v equals the projection of b onto range(M)
            evals, evecs = np.linalg.eigh(M)
            keep = evals > 1e-12 * evals.max()
            proj = evecs[:, keep] @ (evecs[:, keep].T @ b)
            assert np.linalg.norm(M @ v - proj) <= 1e-8 * np.linalg.norm(b)
            # least-norm: v orthogonal to kernel(M)
            kernel = evecs[:, ~keep]
            if kernel.size:
                assert np.linalg.norm(kernel.T @ v) <= 1e-8 * (1 + np.linalg.norm(v))

    def test_factored_solver_matches(self):
        rng = np.random.default_rng(5)
        G = rng.standard_normal((6, 4))
        M = G @ G.T
        b = rng.standard_normal(6)
        solver = PsdSolver(M)
        assert np.allclose(solver.solve(b), solve_least_norm_psd(M, b), atol=1e-10)
        assert solver.quad(b) == pytest.approx(float(b @ solve_least_norm_psd(M, b)))


class TestLambdaMax:
    def test_diagonal(self):
        est = lambda_max(lambda v: np.diag([1.0, 4.0]) @ v, 2, tol=1e-10)
        assert est.value == pytest.approx(4.0, rel=1e-8)
        assert est.residual <= 1e-10 * est.value

    def test_closed_form_2x2(self):
        M = np.array([[2.0, 1.0], [1.0, 2.0]])
        est = lambda_max(lambda v: M @ v, 2, tol=1e-10)
        assert est.value == pytest.approx(3.0, rel=1e-8)

    def test_zero_operator(self):
        est = lambda_max(lambda v: np.zeros(3), 3, tol=1e-10)
        assert est.value == 0.0

    def test_no_convergence_error(self):
        M = np.diag([1.0, 1.0 - 1e-12])
        with pytest.raises(NoConvergence):
            lambda_max(lambda v: M @ v, 2, tol=1e-16, max_iter=3, seed=1)

    @pytest.mark.parametrize("size", [2, 5, 10, 25, 50])
    def test_agrees_with_dense_eigensolver(self, size):
        rng = np.random.default_rng(size)
        G = rng.standard_normal((size, size))
        M = G @ G.T
        expected = float(np.linalg.eigvalsh(M).max())
        est = lambda_max(lambda v: M @ v, size, tol=1e-9, max_iter=200000, seed=3)
        assert est.value == pytest.approx(expected, rel=1e-6)


class TestLambdaMinNonzero:
    def test_diagonal_with_zero(self):
        assert lambda_min_nonzero(np.diag([0.0, 3.0, 5.0])) == pytest.approx(3.0)

    def test_identity(self):
        assert lambda_min_nonzero(np.eye(3)) == pytest.approx(1.0)

    def test_rank_one_projection(self):
        M = np.full((2, 2), 0.5)
        assert lambda_min_nonzero(M) == pytest.approx(1.0)

    def test_zero_matrix(self):
        assert lambda_min_nonzero(np.zeros((3, 3))) == 0.0


class TestSparseMatrix:
    def test_row_and_column_paths_agree(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            rows, cols = int(rng.integers(1, 12)), int(rng.integers(1, 12))
            mask = rng.random((rows, cols)) < 0.4
            triplets = [(i, j, float(rng.standard_normal()))
                        for i in range(rows) for j in range(cols) if mask[i, j]]
            M = SparseMatrix(rows, cols, triplets)
            v = rng.standard_normal(cols)
            assert np.linalg.norm(M.matvec_rows(v) - M.matvec_cols(v)) <= 1e-12

    def test_duplicates_forbidden(self):
        with pytest.raises(BadSubset):
            SparseMatrix(2, 2, [(0, 0, 1.0), (0, 0, 2.0)])

    def test_out_of_range_forbidden(self):
        with pytest.raises(BadSubset):
            SparseMatrix(2, 2, [(2, 0, 1.0)])

    def test_slices_match_dense(self):
        M = SparseMatrix(3, 4, [(0, 1, 2.0), (2, 3, -1.0), (1, 0, 0.5)])
        dense = M.toarray()
        assert np.allclose(M.row_slice([0, 2]), dense[[0, 2], :])
        assert np.allclose(M.col_slice([1, 3]), dense[:, [1, 3]])
