"""First-order baselines on the regularized GLM objective: SGD, SAG, SVRG."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import lambda_max
from .problems import GlmDataset, glm_grad_P, logistic_prime
from .trace import EvalRecord, SolverTrace

DIVERGENCE_GUARD = 1e12


def smoothness_L(dataset: GlmDataset, tol: float = 1e-6, seed: int = 0) -> float:
    """L = lambda_max(A A^T) / (4n) + lambda for the logistic objective."""
    est = lambda_max(lambda v: dataset.A_dot(dataset.At_dot(v)), dataset.d,
                     tol=tol, max_iter=100000, seed=seed)
    return est.value / (4.0 * dataset.n) + dataset.lam


def rule_of_thumb_stepsize(dataset: GlmDataset) -> float:
    """The 1/L default for the stochastic baselines.

    Here L is the per-sample smoothness constant max_i ||a_i||^2 / 4 + lambda,
    the constant the 1/L rule of thumb refers to for single-sample methods
    (the full-gradient constant of smoothness_L is too large a stepsize for
    them on ill-conditioned data).
    """
    from .linalg import SparseMatrix
    if isinstance(dataset.A, SparseMatrix):
        norms2 = np.asarray(dataset.A.csc.multiply(dataset.A.csc).sum(axis=0)).ravel()
    else:
        norms2 = (dataset.A * dataset.A).sum(axis=0)
    return 1.0 / (float(norms2.max()) / 4.0 + dataset.lam)


@dataclass
class BaselineConfig:
    stepsize: Optional[float] = None    # None -> 1 / L
    inner_loop: Optional[int] = None    # svrg only; None -> n
    max_passes: float = 50.0
    tol: float = 1e-5
    eval_every: int = 1000              # iterations between metric evaluations
    seed: int = 0
    time_budget_s: Optional[float] = None


def _sample_deriv(dataset: GlmDataset, a: np.ndarray, w: np.ndarray, i: int) -> float:
    """phi'_i(a_i^T w) for one sample."""
    t = np.array([float(np.dot(a, w))])
    return float(logistic_prime(t, np.array([dataset.y[i]]))[0])


class _Loop:
    """Shared bookkeeping: paused-clock metric evaluation and stopping."""

    def __init__(self, dataset: GlmDataset, config: BaselineConfig, method: str):
        self.dataset = dataset
        self.config = config
        self.trace = SolverTrace(method=method, seed=config.seed)
        self.passes = 0.0
        self.t0 = time.perf_counter()
        self.paused = 0.0
        self.status = "max_iters"

    def evaluate(self, k: int, w: np.ndarray) -> bool:
        """Record a metric row; True means stop (converged/diverged/budget)."""
        p0 = time.perf_counter()
        gnorm = float(np.linalg.norm(glm_grad_P(w, self.dataset)))
        obj = self.dataset.objective(w)
        self.paused += time.perf_counter() - p0
        self.trace.records.append(EvalRecord(
            iteration=k, passes=self.passes,
            wallclock_s=time.perf_counter() - self.t0 - self.paused,
            grad_norm=gnorm, objective=obj))
        if gnorm <= self.config.tol:
            self.status = "converged"
            return True
        if not np.isfinite(gnorm) or gnorm > DIVERGENCE_GUARD:
            self.status = "diverged"
            return True
        if self.config.time_budget_s is not None and \
                time.perf_counter() - self.t0 - self.paused > self.config.time_budget_s:
            self.status = "time_budget"
            return True
        return False

    def finish(self, k: int, w: np.ndarray) -> SolverTrace:
        if self.status == "max_iters" and \
                (not self.trace.records or self.trace.records[-1].iteration != k):
            self.evaluate(k, w)
            if self.status in ("diverged", "time_budget"):
                pass  # final record already reflects the terminal state
        self.trace.status = self.status
        self.trace.iterations = k
        self.trace.final_x = w
        return self.trace


def sgd_run(dataset: GlmDataset, config: BaselineConfig) -> SolverTrace:
    """Single-sample stochastic gradient with constant stepsize."""
    eta = config.stepsize if config.stepsize is not None else rule_of_thumb_stepsize(dataset)
    rng = np.random.default_rng(config.seed)
    n, lam = dataset.n, dataset.lam
    w = np.zeros(dataset.d)
    loop = _Loop(dataset, config, "sgd")
    k = 0
    while loop.passes < config.max_passes:
        if k % config.eval_every == 0 and loop.evaluate(k, w):
            break
        i = int(rng.integers(n))
        a = np.asarray(dataset.cols([i])).ravel()
        w = w - eta * (_sample_deriv(dataset, a, w, i) * a + lam * w)
        loop.passes += 1.0 / n
        k += 1
    return loop.finish(k, w)


def sag_run(dataset: GlmDataset, config: BaselineConfig) -> SolverTrace:
    """Stochastic average gradient.

    The per-sample loss gradient is phi'_i * a_i, so the gradient table is a
    scalar per sample (initialized at zero) plus the running average vector.
    """
    eta = config.stepsize if config.stepsize is not None else rule_of_thumb_stepsize(dataset)
    rng = np.random.default_rng(config.seed)
    n, lam = dataset.n, dataset.lam
    w = np.zeros(dataset.d)
    table = np.zeros(n)                 # stored phi'_i values
    g_avg = np.zeros(dataset.d)         # (1/n) sum_i table[i] * a_i
    loop = _Loop(dataset, config, "sag")
    k = 0
    while loop.passes < config.max_passes:
        if k % config.eval_every == 0 and loop.evaluate(k, w):
            break
        i = int(rng.integers(n))
        a = np.asarray(dataset.cols([i])).ravel()
        new = _sample_deriv(dataset, a, w, i)
        g_avg += (new - table[i]) * a / n
        table[i] = new
        w = w - eta * (g_avg + lam * w)
        loop.passes += 1.0 / n
        k += 1
    trace = loop.finish(k, w)
    trace.final_state = (table, g_avg)
    return trace


def svrg_run(dataset: GlmDataset, config: BaselineConfig) -> SolverTrace:
    """Stochastic variance-reduced gradient, last-iterate outer snapshot."""
    eta = config.stepsize if config.stepsize is not None else rule_of_thumb_stepsize(dataset)
    rng = np.random.default_rng(config.seed)
    n, lam = dataset.n, dataset.lam
    inner = config.inner_loop if config.inner_loop is not None else n
    w = np.zeros(dataset.d)
    loop = _Loop(dataset, config, "svrg")
    k = 0
    stop = False
    while loop.passes < config.max_passes and not stop:
        w_snap = w.copy()
        mu = glm_grad_P(w_snap, dataset)    # full-gradient anchor
        loop.passes += 1.0
        for _ in range(inner):
            if k % config.eval_every == 0 and loop.evaluate(k, w):
                stop = True
                break
            i = int(rng.integers(n))
            a = np.asarray(dataset.cols([i])).ravel()
            g = (_sample_deriv(dataset, a, w, i) - _sample_deriv(dataset, a, w_snap, i)) * a \
                + lam * (w - w_snap) + mu
            w = w - eta * g
            loop.passes += 2.0 / n
            k += 1
            if loop.passes >= config.max_passes:
                break
    return loop.finish(k, w)
