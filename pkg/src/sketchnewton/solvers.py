"""Closed-form specializations of the sketched Newton iteration.

Full Newton-Raphson, nonlinear Kaczmarz, the stochastic Newton method over a
variable-splitting system (plain and relaxed), and randomized subspace
Newton. Each is implemented directly from its explicit update; equivalence
with the generic engine is enforced by tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateRow, SingularHessianSum
from .linalg import solve_least_norm_psd
from .problems import NonlinearSystem, SplitLoss


def newton_raphson_step(system: NonlinearSystem, x: np.ndarray, gamma: float) -> np.ndarray:
    """x - gamma (DF(x)^T)^+ F(x) via a least-squares solve."""
    DF = system.df_full(x)
    d, *_ = np.linalg.lstsq(DF.T, system.eval_F(x), rcond=None)
    return x - gamma * d


def newton_direction(system: NonlinearSystem, x: np.ndarray) -> np.ndarray:
    """n(x) = -(DF(x)^T)^+ F(x), the full Newton direction."""
    DF = system.df_full(x)
    d, *_ = np.linalg.lstsq(DF.T, system.eval_F(x), rcond=None)
    return -d


def kaczmarz_step(system: NonlinearSystem, x: np.ndarray, i: int, gamma: float) -> np.ndarray:
    """Nonlinear Kaczmarz: project along the single component F_i.

    x - gamma * F_i(x) / ||grad F_i(x)||^2 * grad F_i(x).
    """
    Fi = float(system.eval_F(x)[i])
    e = np.zeros((system.m, 1))
    e[i, 0] = 1.0
    g = system.eval_DF_times(x, e).ravel()
    gn = float(np.dot(g, g))
    if np.sqrt(gn) <= 1e-14 * (1.0 + abs(Fi)):
        raise DegenerateRow(f"component {i} has numerically zero gradient")
    return x - gamma * (Fi / gn) * g


@dataclass
class SnmState:
    """Iterate of the stochastic Newton method with incremental caches.

    hess_sum = (1/n) sum_i H_i(alpha_i) and
    vec_sum  = (1/n) sum_i (H_i(alpha_i) alpha_i - grad_i(alpha_i))
    are maintained by rank-tau corrections; a full recompute every n steps
    bounds floating-point drift.
    """

    w: np.ndarray
    alphas: np.ndarray            # shape (n, d)
    hess_sum: np.ndarray = field(default=None)
    vec_sum: np.ndarray = field(default=None)
    steps: int = 0

    @classmethod
    def initial(cls, losses: Sequence[SplitLoss], w0: np.ndarray,
                alphas0: np.ndarray = None) -> "SnmState":
        w0 = np.asarray(w0, dtype=np.float64)
        n = len(losses)
        alphas = (np.tile(w0, (n, 1)) if alphas0 is None
                  else np.asarray(alphas0, dtype=np.float64).copy())
        state = cls(w=w0.copy(), alphas=alphas)
        state.refresh(losses)
        return state

    def refresh(self, losses: Sequence[SplitLoss]) -> None:
        n, d = self.alphas.shape
        self.hess_sum = np.zeros((d, d))
        self.vec_sum = np.zeros(d)
        for i, loss in enumerate(losses):
            a = self.alphas[i]
            H = np.atleast_2d(loss.hess(a))
            self.hess_sum += H / n
            self.vec_sum += (H @ a - np.atleast_1d(loss.grad(a))) / n

    def as_vector(self) -> np.ndarray:
        """Layout [w; alpha_1; ...; alpha_n] matching the split system."""
        return np.concatenate([self.w, self.alphas.ravel()])


def snm_relaxed_step(state: SnmState, losses: Sequence[SplitLoss], B_n: np.ndarray,
                     gamma: float = 1.0) -> SnmState:
    """Relaxed stochastic Newton update; gamma = 1 recovers the plain method.

    w+ = gamma * hess_sum^{-1} vec_sum + (1 - gamma) w, and for i in B_n
    alpha_i+ = w+ - (1 - gamma)(w - alpha_i). Caches are corrected only for
    the tau changed summands.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    n, d = state.alphas.shape
    try:
        w_plain = np.linalg.solve(state.hess_sum, state.vec_sum)
    except np.linalg.LinAlgError as exc:
        raise SingularHessianSum("averaged Hessian is singular") from exc
    if not np.all(np.isfinite(w_plain)):
        raise SingularHessianSum("averaged Hessian solve produced non-finite values")
    w_old = state.w
    w_new = gamma * w_plain + (1.0 - gamma) * w_old
    for i in np.asarray(B_n, dtype=np.int64):
        a_old = state.alphas[i].copy()
        a_new = w_new - (1.0 - gamma) * (w_old - a_old)
        H_old = np.atleast_2d(losses[i].hess(a_old))
        H_new = np.atleast_2d(losses[i].hess(a_new))
        state.hess_sum += (H_new - H_old) / n
        state.vec_sum += ((H_new @ a_new - np.atleast_1d(losses[i].grad(a_new)))
                          - (H_old @ a_old - np.atleast_1d(losses[i].grad(a_old)))) / n
        state.alphas[i] = a_new
    state.w = w_new
    state.steps += 1
    if state.steps % n == 0:
        state.refresh(losses)
    return state


def snm_step(state: SnmState, losses: Sequence[SplitLoss], B_n: np.ndarray) -> SnmState:
    """Plain stochastic Newton update: w+ solves the averaged Newton system,
    and alpha_i+ = w+ on the sampled subset."""
    return snm_relaxed_step(state, losses, B_n, gamma=1.0)


def rsn_step(grad: Callable[[np.ndarray], np.ndarray],
             hess: Callable[[np.ndarray], np.ndarray],
             x: np.ndarray, S_hat: np.ndarray, L_hat: float,
             rel_tol: float = 1e-12) -> np.ndarray:
    """Randomized subspace Newton on an objective with a Hessian oracle.

    x - (1/L_hat) S (S^T H(x) S)^+ S^T grad(x); with S = I and quadratic
    objective this is a damped Newton step.
    """
    if L_hat <= 0:
        raise ValueError("L_hat must be positive")
    S_hat = np.atleast_2d(np.asarray(S_hat, dtype=np.float64))
    g = grad(x)
    H = hess(x)
    v = solve_least_norm_psd(S_hat.T @ H @ S_hat, S_hat.T @ g, rel_tol)
    return x - (S_hat @ v) / L_hat
