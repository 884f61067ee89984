"""Concrete nonlinear systems F(x) = 0 that the solvers operate on.

Covers linear systems, scalar equations, the regularized-GLM primal-dual
system in the variables (alpha, w), and the variable-splitting system whose
sketched Newton steps recover the stochastic Newton method.

Throughout, DF(x) denotes the transpose of the Jacobian of F: its columns
are the gradients of the components F_i.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .errors import DimensionMismatch
from .linalg import SparseMatrix


@dataclass
class NonlinearSystem:
    """A square-or-rectangular system F: R^p -> R^m with sketched-Jacobian products.

    eval_DF_times(x, V) returns DF(x) @ V for V of shape (m, tau) without ever
    materializing DF; eval_DF_full is optional and intended for small
    verification instances only.
    """

    p: int
    m: int
    eval_F: Callable[[np.ndarray], np.ndarray]
    eval_DF_times: Callable[[np.ndarray, np.ndarray], np.ndarray]
    eval_DF_full: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def df_full(self, x: np.ndarray) -> np.ndarray:
        if self.eval_DF_full is not None:
            return self.eval_DF_full(x)
        return self.eval_DF_times(x, np.eye(self.m))


@dataclass
class ScalarProblem:
    """A one-dimensional equation phi(x) = 0 with derivative oracle."""

    phi: Callable[[float], float]
    dphi: Callable[[float], float]


def scalar_system(prob: ScalarProblem) -> NonlinearSystem:
    def F(x):
        return np.array([prob.phi(float(x[0]))])

    def DFt(x, V):
        return prob.dphi(float(x[0])) * np.atleast_2d(V)

    return NonlinearSystem(p=1, m=1, eval_F=F, eval_DF_times=DFt,
                           eval_DF_full=lambda x: np.array([[prob.dphi(float(x[0]))]]))


def linear_system(A: np.ndarray, b: np.ndarray) -> NonlinearSystem:
    """F(x) = A x - b; DF(x) = A^T is constant."""
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, p = A.shape
    return NonlinearSystem(
        p=p, m=m,
        eval_F=lambda x: A @ x - b,
        eval_DF_times=lambda x, V: A.T @ V,
        eval_DF_full=lambda x: A.T.copy(),
    )


def scalar_star_convexity_check(prob: ScalarProblem, x: float, x_star: float,
                                tol: float = 1e-12) -> bool:
    """Star-convexity test for phi(x)^2 around a root x_star.

    True iff phi(x) * (phi(x) + 2 phi'(x) (x_star - x)) <= tol.
    """
    v = prob.phi(x)
    return v * (v + 2.0 * prob.dphi(x) * (x_star - x)) <= tol


# ---------------------------------------------------------------------------
# Regularized GLM: P(w) = (1/n) sum_i phi_i(a_i^T w) + (lambda/2) ||w||^2
# ---------------------------------------------------------------------------

def glm_phi_derivs(t: float, y: float) -> tuple[float, float, float]:
    """(phi, phi', phi'') of the logistic loss phi(t) = ln(1 + e^{-y t}).

    Overflow-safe for all finite t; saturates gracefully at extremes.
    """
    yt = y * t
    val = float(np.logaddexp(0.0, -yt))
    s = float(expit(-yt))            # 1 / (1 + e^{yt})
    return val, -y * s, s * (1.0 - s)


def logistic_prime(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """phi'(t) = -y / (1 + e^{y t}), vectorized and overflow-safe."""
    return -y * expit(-y * t)


def logistic_second(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """phi''(t) = e^{y t} / (1 + e^{y t})^2, vectorized and overflow-safe."""
    s = expit(-y * t)
    return s * (1.0 - s)


@dataclass
class GlmDataset:
    """Feature matrix A (d x n, columns are samples), labels in {-1, +1}, ridge lambda."""

    A: object                  # SparseMatrix or dense ndarray, shape (d, n)
    y: np.ndarray
    lam: float
    loss: str = "logistic"
    zero_columns: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.loss != "logistic":
            raise ValueError(f"unsupported loss family: {self.loss}")
        d, n = self.shape
        if self.y.shape != (n,):
            raise DimensionMismatch(f"labels shape {self.y.shape}, expected ({n},)")
        # flag zero-norm feature columns rather than failing silently
        if isinstance(self.A, SparseMatrix):
            norms = np.asarray(self.A.csc.multiply(self.A.csc).sum(axis=0)).ravel()
        else:
            self.A = np.asarray(self.A, dtype=np.float64)
            norms = (self.A * self.A).sum(axis=0)
        self.zero_columns = np.flatnonzero(norms == 0.0)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def d(self) -> int:
        return self.A.shape[0]

    # -- matrix actions, routed through whichever storage A uses --

    def A_dot(self, u: np.ndarray) -> np.ndarray:
        """A @ u, u of length n (or matrix with n rows)."""
        if isinstance(self.A, SparseMatrix):
            return self.A.matvec_cols(u)
        return self.A @ u

    def At_dot(self, v: np.ndarray) -> np.ndarray:
        """A^T @ v, v of length d (or matrix with d rows)."""
        if isinstance(self.A, SparseMatrix):
            return self.A.rmatvec(v)
        return self.A.T @ v

    def cols(self, idx) -> np.ndarray:
        """Dense d x |idx| slice A[:, idx]."""
        if isinstance(self.A, SparseMatrix):
            return self.A.col_slice(idx)
        return self.A[:, idx]

    def rows(self, idx) -> np.ndarray:
        """Dense |idx| x n slice A[idx, :]."""
        if isinstance(self.A, SparseMatrix):
            return self.A.row_slice(idx)
        return self.A[idx, :]

    def dense(self) -> np.ndarray:
        if isinstance(self.A, SparseMatrix):
            return self.A.toarray()
        return self.A

    def margins(self, w: np.ndarray) -> np.ndarray:
        return self.At_dot(w)

    def phi_prime(self, t: np.ndarray) -> np.ndarray:
        return logistic_prime(t, self.y)

    def phi_second(self, t: np.ndarray) -> np.ndarray:
        return logistic_second(t, self.y)

    def objective(self, w: np.ndarray) -> float:
        t = self.margins(w)
        losses = np.logaddexp(0.0, -self.y * t)
        return float(losses.mean() + 0.5 * self.lam * np.dot(w, w))


def glm_grad_P(w: np.ndarray, dataset: GlmDataset) -> np.ndarray:
    """Gradient of the regularized objective: (1/n) A phi'(A^T w) + lambda w."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (dataset.d,):
        raise DimensionMismatch(f"w shape {w.shape}, expected ({dataset.d},)")
    u = dataset.phi_prime(dataset.margins(w))
    return dataset.A_dot(u) / dataset.n + dataset.lam * w


def glm_system(dataset: GlmDataset) -> NonlinearSystem:
    """The (n+d)-dimensional primal-dual system in x = [alpha; w].

    F(alpha; w) = [A alpha/(lambda n) - w ; alpha + Phi(w)] where
    Phi(w)_i = phi'_i(a_i^T w). Sketched Jacobian products use the block
    structure directly and never form DF.
    """
    n, d, lam = dataset.n, dataset.d, dataset.lam

    def F(x):
        alpha, w = x[:n], x[n:]
        t = dataset.margins(w)
        return np.concatenate([dataset.A_dot(alpha) / (lam * n) - w,
                               alpha + dataset.phi_prime(t)])

    def DFt(x, V):
        # DF row-blocks: alpha (n) then w (d); column-blocks: the linear
        # residual (d) then the dual residual (n)
        w = x[n:]
        V = np.atleast_2d(np.asarray(V, dtype=np.float64))
        if V.shape[0] != n + d:
            raise DimensionMismatch(f"V has {V.shape[0]} rows, expected {n + d}")
        V1, V2 = V[:d], V[d:]
        dsec = dataset.phi_second(dataset.margins(w))
        top = dataset.At_dot(V1) / (lam * n) + V2
        bottom = -V1 + dataset.A_dot(dsec[:, None] * V2)
        return np.concatenate([top, bottom], axis=0)

    return NonlinearSystem(p=n + d, m=n + d, eval_F=F, eval_DF_times=DFt)


def glm_root_dual(dataset: GlmDataset, w: np.ndarray) -> np.ndarray:
    """The dual point alpha = -Phi(w) that zeroes the second block at w."""
    return -dataset.phi_prime(dataset.margins(w))


# ---------------------------------------------------------------------------
# Variable-splitting system for finite sums P(w) = (1/n) sum_i phi_i(w)
# ---------------------------------------------------------------------------

@dataclass
class SplitLoss:
    """One strictly convex summand with gradient and Hessian oracles."""

    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]


def quadratic_loss(C: np.ndarray, c: np.ndarray) -> SplitLoss:
    """phi(v) = 1/2 (v - c)^T C (v - c) for positive-definite C."""
    C = np.asarray(C, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    return SplitLoss(grad=lambda v: C @ (v - c), hess=lambda v: C.copy())


def snm_system(losses: Sequence[SplitLoss], d: int) -> NonlinearSystem:
    """Square system in x = [w; alpha_1; ...; alpha_n] of dimension (n+1)d.

    F = [(1/n) sum_i grad phi_i(alpha_i) ; w - alpha_1 ; ... ; w - alpha_n].
    Its stationary points have all alpha_i = w = argmin P.
    """
    n = len(losses)
    p = (n + 1) * d

    def blocks(x):
        w = x[:d]
        alphas = [x[d * (i + 1): d * (i + 2)] for i in range(n)]
        return w, alphas

    def F(x):
        w, alphas = blocks(x)
        avg_grad = sum(losses[i].grad(alphas[i]) for i in range(n)) / n
        return np.concatenate([avg_grad] + [w - a for a in alphas])

    def DFt(x, V):
        _, alphas = blocks(x)
        V = np.atleast_2d(np.asarray(V, dtype=np.float64))
        if V.shape[0] != p:
            raise DimensionMismatch(f"V has {V.shape[0]} rows, expected {p}")
        V0 = V[:d]
        Vi = [V[d * (i + 1): d * (i + 2)] for i in range(n)]
        out = np.empty((p, V.shape[1]))
        out[:d] = sum(Vi)
        for i in range(n):
            H = losses[i].hess(alphas[i])
            out[d * (i + 1): d * (i + 2)] = (H @ V0) / n - Vi[i]
        return out

    return NonlinearSystem(p=p, m=p, eval_F=F, eval_DF_times=DFt)
