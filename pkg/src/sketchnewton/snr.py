"""The generic sketched Newton engine.

One iteration solves the sketched Newton system in a tau-dimensional
subspace and moves

    x <- x - gamma * DF(x) S (S^T DF(x)^T DF(x) S)^+ S^T F(x).

The same quantities define the stochastic objectives
f_{S,y}(x) = 1/2 ||F(x)||^2 in the seminorm induced by
H_S(y) = S (S^T DF(y)^T DF(y) S)^+ S^T, under which the iteration is exactly
SGD with stepsize gamma. Verification oracles (constrained projection,
sketched Gauss-Newton) are implemented through independent SVD-based routes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InfeasibleConstraint, SingularW
from .linalg import lambda_min_nonzero, solve_least_norm_psd
from .problems import NonlinearSystem
from .sketches import SketchRealization, sample
from .trace import EvalRecord, SolverTrace

DIVERGENCE_GUARD = 1e12


@dataclass
class SnrConfig:
    gamma: float = 1.0
    max_iters: int = 1000
    stop_tol: float = 1e-10
    eval_every: int = 1000
    seed: int = 0
    time_budget_s: Optional[float] = None
    rel_tol: float = 1e-12

    def __post_init__(self):
        if not 0.0 < self.gamma < 2.0:
            raise ValueError("gamma must lie in (0, 2)")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")


def _sketched_parts(system: NonlinearSystem, x: np.ndarray, S: SketchRealization):
    Smat = S.matrix()
    DFS = system.eval_DF_times(x, Smat)
    Fx = system.eval_F(x)
    return DFS, S.st_dot(Fx), Fx


def snr_step(system: NonlinearSystem, x: np.ndarray, S: SketchRealization,
             gamma: float, rel_tol: float = 1e-12) -> np.ndarray:
    """One sketched Newton update from x."""
    DFS, rhs, _ = _sketched_parts(system, x, S)
    v = solve_least_norm_psd(DFS.T @ DFS, rhs, rel_tol)
    return x - gamma * (DFS @ v)


def sketched_metric_value(system: NonlinearSystem, x: np.ndarray, y: np.ndarray,
                          S: SketchRealization, rel_tol: float = 1e-12) -> float:
    """f_{S,y}(x): half the residual norm squared in the H_S(y) seminorm."""
    DFS_y = system.eval_DF_times(y, S.matrix())
    rhs = S.st_dot(system.eval_F(x))
    v = solve_least_norm_psd(DFS_y.T @ DFS_y, rhs, rel_tol)
    return 0.5 * float(np.dot(rhs, v))


def sketched_metric_grad(system: NonlinearSystem, x: np.ndarray, y: np.ndarray,
                         S: SketchRealization, rel_tol: float = 1e-12) -> np.ndarray:
    """Gradient of f_{S,y} at x: DF(x) H_S(y) F(x)."""
    Smat = S.matrix()
    DFS_y = system.eval_DF_times(y, Smat)
    rhs = S.st_dot(system.eval_F(x))
    v = solve_least_norm_psd(DFS_y.T @ DFS_y, rhs, rel_tol)
    DFS_x = DFS_y if x is y else system.eval_DF_times(x, Smat)
    return DFS_x @ v


def snr_step_weighted(system: NonlinearSystem, x: np.ndarray, S: SketchRealization,
                      gamma: float, W: np.ndarray, rel_tol: float = 1e-12) -> np.ndarray:
    """Changing-norm update x - gamma W^{-1} DF S (S^T DF^T W^{-1} DF S)^+ S^T F."""
    DFS, rhs, _ = _sketched_parts(system, x, S)
    W = np.asarray(W, dtype=np.float64)
    try:
        L = np.linalg.cholesky(0.5 * (W + W.T))
    except np.linalg.LinAlgError as exc:
        raise SingularW("weight matrix is not positive-definite") from exc
    Z = np.linalg.solve(L.T, np.linalg.solve(L, DFS))   # W^{-1} DF S
    v = solve_least_norm_psd(DFS.T @ Z, rhs, rel_tol)
    return x - gamma * (Z @ v)


def sketch_and_project_oracle(system: NonlinearSystem, x: np.ndarray,
                              S: SketchRealization, gamma: float) -> np.ndarray:
    """Projection of x onto the sketched Newton system's solution space.

    Solves min ||x' - x||^2 subject to S^T DF(x)^T (x' - x) = -gamma S^T F(x)
    densely (SVD least-norm; independent of the solver's eigensolve path).
    """
    DFS, rhs, _ = _sketched_parts(system, x, S)
    C = DFS.T                                            # tau x p constraint matrix
    target = -gamma * rhs
    d, *_ = np.linalg.lstsq(C, target, rcond=None)
    if np.linalg.norm(C @ d - target) > 1e-8 * (1.0 + np.linalg.norm(target)):
        raise InfeasibleConstraint("sketched Newton system is inconsistent at x")
    return x + d


def gauss_newton_step(system: NonlinearSystem, x: np.ndarray, S: SketchRealization,
                      gamma: float) -> np.ndarray:
    """Least-norm minimizer of ||DF(x)^T d + gamma F(x)||^2 in the H_S(x) seminorm.

    Dense SVD pseudoinverses throughout; verification oracle only.
    """
    DFS, rhs, _ = _sketched_parts(system, x, S)
    Mpinv = np.linalg.pinv(DFS.T @ DFS)
    G = DFS @ Mpinv @ DFS.T                              # DF H_S(x) DF^T, p x p
    d = -gamma * (np.linalg.pinv(G) @ (DFS @ (Mpinv @ rhs)))
    return x + d


def run_snr(system: NonlinearSystem, dist, config: SnrConfig,
            metric: Optional[Callable[[np.ndarray], float]] = None,
            x0: Optional[np.ndarray] = None, method_name: str = "snr") -> SolverTrace:
    """The full solver loop: sample a fresh sketch, step, monitor, repeat.

    `metric` is the stopping metric (default ||F(x)||), evaluated every
    config.eval_every iterations with the wall clock paused. Deterministic
    for a fixed seed.
    """
    rng = np.random.default_rng(config.seed)
    x = np.zeros(system.p) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    if metric is None:
        metric = lambda z: float(np.linalg.norm(system.eval_F(z)))

    trace = SolverTrace(method=method_name, seed=config.seed)
    f_hist = []
    t0 = time.perf_counter()
    paused = 0.0

    def evaluate(k: int) -> bool:
        nonlocal paused
        p0 = time.perf_counter()
        val = metric(x)
        Fx = system.eval_F(x)
        obj = 0.5 * float(np.dot(Fx, Fx))
        paused += time.perf_counter() - p0
        trace.records.append(EvalRecord(
            iteration=k, passes=float(k), wallclock_s=time.perf_counter() - t0 - paused,
            grad_norm=val, objective=obj))
        return val <= config.stop_tol

    k = 0
    status = "max_iters"
    for k in range(config.max_iters):
        if k % config.eval_every == 0:
            if evaluate(k):
                status = "converged"
                break
            if config.time_budget_s is not None and \
                    time.perf_counter() - t0 - paused > config.time_budget_s:
                status = "time_budget"
                break
        S = sample(dist, rng, system=system, x=x)
        DFS = system.eval_DF_times(x, S.matrix())
        Fx = system.eval_F(x)
        Fnorm_sq = float(np.dot(Fx, Fx))
        if not np.isfinite(Fnorm_sq) or Fnorm_sq > DIVERGENCE_GUARD ** 2:
            status = "diverged"
            break
        rhs = S.st_dot(Fx)
        v = solve_least_norm_psd(DFS.T @ DFS, rhs, config.rel_tol)
        f_t = 0.5 * float(np.dot(rhs, v))
        f_hist.append(f_t)
        trace.best_f = min(trace.best_f, f_t)
        trace.best_F_sq = min(trace.best_F_sq, Fnorm_sq)
        x = x - config.gamma * (DFS @ v)
    else:
        k = config.max_iters

    if status == "max_iters" and k == config.max_iters:
        if evaluate(k):
            status = "converged"
    elif status == "converged":
        pass
    elif status != "diverged" and (not trace.records or trace.records[-1].iteration != k):
        evaluate(k)

    trace.status = status
    trace.iterations = k
    trace.final_x = x
    trace.f_history = np.array(f_hist)
    return trace


@dataclass
class RhoEstimate:
    rho: float
    L_bound: float
    samples: int


def estimate_rho(system: NonlinearSystem, points: Sequence[np.ndarray], dist,
                 samples: int, rng: np.random.Generator) -> RhoEstimate:
    """Monte Carlo estimate of the rate constant rho and the bound L.

    rho is the smallest nonzero eigenvalue of DF(x) E[H_S(x)] DF(x)^T,
    minimized over the supplied points; L_bound is the largest spectral norm
    of DF(x) seen. Diagnostic only: materializes m x m averages (m <= 200).
    """
    if system.m > 200:
        raise ValueError("estimate_rho is a diagnostic for m <= 200")
    rho = np.inf
    L = 0.0
    for x in points:
        DF = system.df_full(x)
        E_H = np.zeros((system.m, system.m))
        for _ in range(samples):
            Smat = sample(dist, rng, system=system, x=x).matrix()
            DFS = DF @ Smat
            E_H += Smat @ np.linalg.pinv(DFS.T @ DFS) @ Smat.T
        E_H /= samples
        P = DF @ E_H @ DF.T
        rho = min(rho, lambda_min_nonzero(0.5 * (P + P.T), rel_tol=1e-9))
        L = max(L, float(np.linalg.norm(DF, 2)))
    return RhoEstimate(rho=float(min(max(rho, 0.0), 1.0 + 1e-9)), L_bound=L, samples=samples)
