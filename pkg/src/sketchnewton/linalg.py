"""Dense and sparse linear-algebra primitives shared by the solvers.

Provides least-norm solutions of small symmetric PSD systems (pseudoinverse
semantics with relative eigenvalue truncation), power-iteration spectral
estimates, and a sparse matrix with both row-indexed and column-indexed
access paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import BadSubset, NoConvergence, NonFinite, NonSymmetric

DEFAULT_REL_TOL = 1e-12


def _check_finite(x: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(x)):
        raise NonFinite(f"{what} contains NaN or Inf")


def solve_least_norm_psd(M: np.ndarray, b: np.ndarray,
                         rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Minimum-norm minimizer of ||M v - b|| for symmetric PSD M.

    Computed through a symmetric eigendecomposition; eigenvalues below
    rel_tol times the largest are treated as zero, which realizes the
    pseudoinverse solve M^+ b.
    """
    M = np.asarray(M, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_finite(M, "matrix")
    _check_finite(b, "right-hand side")
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NonSymmetric(f"expected square matrix, got shape {M.shape}")
    scale = np.abs(M).max() if M.size else 0.0
    if not np.allclose(M, M.T, atol=max(rel_tol * max(scale, 1.0), rel_tol)):
        raise NonSymmetric("matrix is not symmetric within tolerance")
    evals, evecs = np.linalg.eigh(0.5 * (M + M.T))
    cutoff = rel_tol * max(evals.max(initial=0.0), 0.0)
    inv = np.where(evals > cutoff, 1.0 / np.where(evals > cutoff, evals, 1.0), 0.0)
    return evecs @ (inv * (evecs.T @ b))


class PsdSolver:
    """Factored form of a symmetric PSD matrix for repeated pseudoinverse solves."""

    def __init__(self, M: np.ndarray, rel_tol: float = DEFAULT_REL_TOL):
        M = np.asarray(M, dtype=np.float64)
        _check_finite(M, "matrix")
        evals, evecs = np.linalg.eigh(0.5 * (M + M.T))
        cutoff = rel_tol * max(evals.max(initial=0.0), 0.0)
        keep = evals > cutoff
        self._vecs = evecs[:, keep]
        self._inv = 1.0 / evals[keep]

    def solve(self, b: np.ndarray) -> np.ndarray:
        return self._vecs @ (self._inv * (self._vecs.T @ b))

    def quad(self, b: np.ndarray) -> float:
        """b^T M^+ b (nonnegative)."""
        proj = self._vecs.T @ b
        return float(np.dot(proj * self._inv, proj))


@dataclass
class SpectralEstimate:
    """Result of an iterative eigenvalue estimate."""

    value: float
    iterations: int
    residual: float


def lambda_max(apply, dim: int, tol: float = 1e-8, max_iter: int = 10000,
               seed: int = 0) -> SpectralEstimate:
    """Largest eigenvalue of a symmetric PSD operator by power iteration.

    `apply` is the matrix-vector action. The starting vector is drawn from a
    seeded generator so results are deterministic. Raises NoConvergence if the
    eigenresidual still exceeds tol * value after max_iter iterations.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(1, max_iter + 1):
        Mv = np.asarray(apply(v), dtype=np.float64)
        _check_finite(Mv, "operator output")
        lam = float(np.dot(v, Mv))
        residual = float(np.linalg.norm(Mv - lam * v))
        if residual <= tol * max(lam, np.finfo(float).tiny):
            return SpectralEstimate(value=max(lam, 0.0), iterations=it, residual=residual)
        norm = np.linalg.norm(Mv)
        if norm == 0.0:
            # operator annihilates the iterate: restart in a fresh direction,
            # and accept 0 once every direction tried is annihilated
            if it >= dim:
                return SpectralEstimate(value=0.0, iterations=it, residual=0.0)
            v = rng.standard_normal(dim)
            v /= np.linalg.norm(v)
            continue
        v = Mv / norm
    raise NoConvergence(f"power iteration: residual {residual:.3e} after {max_iter} iterations")


def lambda_min_nonzero(M: np.ndarray, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Smallest eigenvalue above rel_tol * lambda_max, or 0 for the zero matrix.

    Diagnostic-only: performs a full symmetric eigendecomposition.
    """
    M = np.asarray(M, dtype=np.float64)
    _check_finite(M, "matrix")
    if not np.allclose(M, M.T, atol=rel_tol * max(np.abs(M).max(initial=0.0), 1.0)):
        raise NonSymmetric("matrix is not symmetric within tolerance")
    evals = np.linalg.eigvalsh(0.5 * (M + M.T))
    top = evals.max(initial=0.0)
    if top <= 0.0:
        return 0.0
    nonzero = evals[evals > rel_tol * top]
    return float(nonzero.min()) if nonzero.size else 0.0


class SparseMatrix:
    """Sparse matrix with both row-indexed and column-indexed access paths.

    Built from (row, col, value) triplets; duplicates are rejected. Internally
    keeps a CSR/CSC pair describing the same matrix, so row slices and column
    slices are both cheap.
    """

    def __init__(self, rows: int, cols: int, triplets) -> None:
        triplets = list(triplets)
        if triplets:
            r, c, v = (np.asarray(t) for t in zip(*triplets))
        else:
            r = c = np.zeros(0, dtype=np.int64)
            v = np.zeros(0)
        if r.size and (r.min() < 0 or r.max() >= rows or c.min() < 0 or c.max() >= cols):
            raise BadSubset("triplet index out of range")
        if len({(int(i), int(j)) for i, j in zip(r, c)}) != r.size:
            raise BadSubset("duplicate (row, col) triplet")
        _check_finite(np.asarray(v, dtype=np.float64), "triplet values")
        coo = sp.coo_matrix((v.astype(np.float64), (r, c)), shape=(rows, cols))
        self.csr = coo.tocsr()
        self.csc = coo.tocsc()

    @classmethod
    def from_scipy(cls, mat) -> "SparseMatrix":
        obj = cls.__new__(cls)
        obj.csr = sp.csr_matrix(mat)
        obj.csc = sp.csc_matrix(mat)
        return obj

    @property
    def shape(self):
        return self.csr.shape

    @property
    def nnz(self) -> int:
        return self.csr.nnz

    def matvec_rows(self, v: np.ndarray) -> np.ndarray:
        """M @ v via the row-indexed (CSR) path."""
        return self.csr @ v

    def matvec_cols(self, v: np.ndarray) -> np.ndarray:
        """M @ v via the column-indexed (CSC) path."""
        return self.csc @ v

    def rmatvec(self, v: np.ndarray) -> np.ndarray:
        """M^T @ v."""
        return self.csr.T @ v

    def row_slice(self, idx) -> np.ndarray:
        return np.asarray(self.csr[idx, :].todense())

    def col_slice(self, idx) -> np.ndarray:
        return np.asarray(self.csc[:, idx].todense())

    def toarray(self) -> np.ndarray:
        return self.csr.toarray()
