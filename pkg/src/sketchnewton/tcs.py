"""Tossing-coin-sketch solver for regularized GLMs.

Works on the primal-dual system F(alpha; w) = [A alpha/(lambda n) - w ;
alpha + Phi(w)] but never materializes it: a Bernoulli(b) coin picks, each
iteration, either the linear primal block (a tau_d-subset of the d linear
rows, closed-form update through the cached covariance AA^T/(lambda n)^2) or
the nonlinear dual block (a tau_n-subset of samples, a tau_n x tau_n solve).
Includes the single-row variant and a stochastic Armijo line search for the
nonlinear block.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import BadSubset, LineSearchStalled
from .linalg import PsdSolver, SparseMatrix, solve_least_norm_psd
from .problems import GlmDataset, glm_grad_P, logistic_prime, logistic_second
from .sketches import floyd_subset
from .trace import EvalRecord, SolverTrace

DIVERGENCE_GUARD = 1e12
ALPHA_BAR_DRIFT = 1e-8


def p_uniform(tau_d: int, tau_n: int, d: int, n: int) -> float:
    """Coin bias that samples every row of the (n+d)-system uniformly:
    tau_d n / (tau_d n + tau_n d). With tau_d = d it is n / (n + tau_n)."""
    return tau_d * n / (tau_d * n + tau_n * d)


def b_preset(name: str, n: int, tau_n: int) -> float:
    """Named Bernoulli-parameter recipes used in the reference experiments."""
    base = n / (n + tau_n)
    if name == "minus003":
        return base - 0.03
    if name == "minus011":
        return base - 0.11
    if name == "third":
        return n / (n + 3 * tau_n)
    raise ValueError(f"unknown b preset {name!r}")


def default_b(tau_d: int, tau_n: int, d: int, n: int) -> float:
    """Slightly below the uniform-sampling bias, clamped inside (0, 1)."""
    return float(np.clip(p_uniform(tau_d, tau_n, d, n) - 0.01, 1e-6, 1.0 - 1e-6))


def default_gamma(condition_number: float) -> float:
    """Stepsize policy: 1 for ill-conditioned problems, 1.8 otherwise."""
    return 1.0 if condition_number >= 1e6 else 1.8


@dataclass
class ArmijoParams:
    c: float = 0.09
    beta: float = 0.9
    gamma_init: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.c <= 0.5:
            raise ValueError("Armijo c must lie in (0, 1/2]")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("Armijo beta must lie in (0, 1)")


@dataclass
class TcsConfig:
    tau_d: int
    tau_n: int
    b: Optional[float] = None           # None -> default_b
    gamma: float = 1.0                  # nonlinear-block stepsize; linear block uses 1
    tol: float = 1e-5
    max_iters: int = 10 ** 6
    eval_every: int = 1000
    seed: int = 0
    time_budget_s: Optional[float] = None
    line_search: Optional[ArmijoParams] = None
    audit: bool = False                 # record per-step line-search evidence


@dataclass
class StepAudit:
    kind: str                 # "linear" | "nonlinear"
    gamma: float
    extra_evals: int
    accepted_ok: bool         # independent re-check of the acceptance inequality


@dataclass
class TcsState:
    """(alpha, w) iterate with the cached dual image and covariance.

    alpha_bar tracks A alpha / (lambda n); cov = A A^T / (lambda n)^2 is
    precomputed once and never mutated.
    """

    alpha: np.ndarray
    w: np.ndarray
    alpha_bar: np.ndarray
    cov: np.ndarray

    @classmethod
    def initial(cls, dataset: GlmDataset) -> "TcsState":
        cov = compute_cov(dataset)
        return cls(alpha=np.zeros(dataset.n), w=np.zeros(dataset.d),
                   alpha_bar=np.zeros(dataset.d), cov=cov)

    def refresh_alpha_bar(self, dataset: GlmDataset) -> None:
        exact = dataset.A_dot(self.alpha) / (dataset.lam * dataset.n)
        if np.linalg.norm(self.alpha_bar - exact) > \
                ALPHA_BAR_DRIFT * (1.0 + np.linalg.norm(self.alpha)):
            self.alpha_bar = exact

    def as_vector(self) -> np.ndarray:
        """[alpha; w], the primal-dual system's layout."""
        return np.concatenate([self.alpha, self.w])


def compute_cov(dataset: GlmDataset) -> np.ndarray:
    """Dense A A^T / (lambda n)^2; assumes d is moderate (<= 4000)."""
    if dataset.d > 4000:
        raise ValueError("dense covariance cache supports d <= 4000")
    if isinstance(dataset.A, SparseMatrix):
        gram = (dataset.A.csr @ dataset.A.csr.T).toarray()
    else:
        gram = dataset.A @ dataset.A.T
    return gram / (dataset.lam * dataset.n) ** 2


def _check_subset(B: np.ndarray, limit: int) -> np.ndarray:
    B = np.asarray(B, dtype=np.int64)
    if B.size == 0 or (B.size > 1 and (np.diff(B) <= 0).any()) or B[0] < 0 or B[-1] >= limit:
        raise BadSubset("subset must be nonempty, sorted, distinct, in range")
    return B


def tcs_linear_block_step(state: TcsState, dataset: GlmDataset, B_d: np.ndarray,
                          gamma: float = 1.0) -> None:
    """Closed-form sketched step on the linear rows B_d (in place).

    Solves (cov[B,B] + I) y = alpha_bar[B] - w[B]; with gamma = 1 the linear
    residual restricted to B_d becomes zero.
    """
    B = _check_subset(B_d, dataset.d)
    lam_n = dataset.lam * dataset.n
    y = solve_least_norm_psd(state.cov[np.ix_(B, B)] + np.eye(B.size),
                             state.alpha_bar[B] - state.w[B])
    state.w[B] += gamma * y
    state.alpha -= gamma * (dataset.rows(B).T @ y).ravel() / lam_n
    state.alpha_bar -= gamma * (state.cov[:, B] @ y)


@dataclass
class _NonlinearPieces:
    """Everything the nonlinear block step (and its line search) needs."""

    B: np.ndarray
    Acols: np.ndarray         # d x tau
    t: np.ndarray             # sample margins on B
    phi1: np.ndarray
    phi2: np.ndarray
    G: np.ndarray             # d x tau, the sketched Jacobian block
    r: np.ndarray             # alpha_B + Phi_B, the block residual
    solver: PsdSolver         # factored G^T G + I
    y: np.ndarray             # least-norm solution of (G^T G + I) y = -r


def _prepare_nonlinear(state: TcsState, dataset: GlmDataset, B_n: np.ndarray) -> _NonlinearPieces:
    B = _check_subset(B_n, dataset.n)
    Acols = np.asarray(dataset.cols(B))
    t = Acols.T @ state.w
    yb = dataset.y[B]
    phi1 = logistic_prime(t, yb)
    phi2 = logistic_second(t, yb)
    G = Acols * phi2
    r = state.alpha[B] + phi1
    solver = PsdSolver(G.T @ G + np.eye(B.size))
    y = solver.solve(-r)
    return _NonlinearPieces(B=B, Acols=Acols, t=t, phi1=phi1, phi2=phi2, G=G,
                            r=r, solver=solver, y=y)


def _apply_nonlinear(state: TcsState, dataset: GlmDataset, pieces: _NonlinearPieces,
                     gamma: float) -> None:
    lam_n = dataset.lam * dataset.n
    state.alpha[pieces.B] += gamma * pieces.y
    state.w += gamma * (pieces.G @ pieces.y)
    state.alpha_bar += gamma * (pieces.Acols @ pieces.y) / lam_n


def tcs_nonlinear_block_step(state: TcsState, dataset: GlmDataset, B_n: np.ndarray,
                             gamma: float) -> None:
    """Sketched step on the nonlinear rows B_n: a tau_n x tau_n solve (in place)."""
    _apply_nonlinear(state, dataset, _prepare_nonlinear(state, dataset, B_n), gamma)


def kaczmarz_tcs_step(state: TcsState, dataset: GlmDataset, nonlinear: bool,
                      index: int, gamma: float = 1.0) -> None:
    """Single-row variant (tau_d = tau_n = 1) with scalar denominators."""
    lam_n = dataset.lam * dataset.n
    if nonlinear:
        a = np.asarray(dataset.cols([index])).ravel()
        t = float(np.dot(a, state.w))
        y = float(dataset.y[index])
        phi1 = float(logistic_prime(np.array([t]), np.array([y]))[0])
        phi2 = float(logistic_second(np.array([t]), np.array([y]))[0])
        denom = float(np.dot(a, a)) * phi2 ** 2 + 1.0
        delta = -(state.alpha[index] + phi1) / denom
        state.alpha[index] += gamma * delta
        state.w += gamma * delta * phi2 * a
        state.alpha_bar += gamma * delta * a / lam_n
    else:
        j = index
        y = (state.alpha_bar[j] - state.w[j]) / (state.cov[j, j] + 1.0)
        state.w[j] += gamma * y
        state.alpha -= gamma * y * dataset.rows([j]).ravel() / lam_n
        state.alpha_bar -= gamma * y * state.cov[:, j]


def _resolve_config(dataset: GlmDataset, config: TcsConfig) -> TcsConfig:
    tau_d, tau_n = config.tau_d, config.tau_n
    if tau_d > dataset.d:
        warnings.warn(f"tau_d={tau_d} clamped to d={dataset.d}")
        tau_d = dataset.d
    if tau_n > dataset.n:
        warnings.warn(f"tau_n={tau_n} clamped to n={dataset.n}")
        tau_n = dataset.n
    b = config.b if config.b is not None else default_b(tau_d, tau_n, dataset.d, dataset.n)
    if not 0.0 < b < 1.0:
        raise ValueError("Bernoulli parameter b must lie strictly in (0, 1)")
    out = TcsConfig(**{**config.__dict__, "tau_d": tau_d, "tau_n": tau_n, "b": b})
    return out


def _armijo_nonlinear(state: TcsState, dataset: GlmDataset, pieces: _NonlinearPieces,
                      params: ArmijoParams, audit: bool) -> StepAudit:
    """Backtrack on the sketched objective f(gamma) = 1/2 r(gamma)^T M^+ r(gamma),
    reusing the factored M = G^T G + I; then apply the accepted step."""
    f0 = 0.5 * pieces.solver.quad(pieces.r)
    gamma = params.gamma_init
    evals = 0
    # trial margins are t + gamma * s with s = Acols^T (G y)
    s = pieces.Acols.T @ (pieces.G @ pieces.y)
    yb = dataset.y[pieces.B]
    alpha_B = state.alpha[pieces.B]
    while True:
        r_trial = alpha_B + gamma * pieces.y + logistic_prime(pieces.t + gamma * s, yb)
        f_trial = 0.5 * pieces.solver.quad(r_trial)
        evals += 1
        if f_trial <= (1.0 - 2.0 * params.c * gamma) * f0 + 1e-15:
            break
        gamma *= params.beta
        if gamma < 1e-12:
            raise LineSearchStalled("backtracking stepsize underflowed")
    ok = True
    if audit:
        # independent route: rebuild the block system and use an SVD pseudoinverse
        M = pieces.G.T @ pieces.G + np.eye(pieces.B.size)
        Mp = np.linalg.pinv(M)
        r_acc = alpha_B + gamma * pieces.y + logistic_prime(pieces.t + gamma * s, yb)
        f_acc = 0.5 * float(r_acc @ Mp @ r_acc)
        f0_ind = 0.5 * float(pieces.r @ Mp @ pieces.r)
        ok = f_acc <= (1.0 - 2.0 * params.c * gamma) * f0_ind + 1e-10 * (1.0 + f0_ind)
    _apply_nonlinear(state, dataset, pieces, gamma)
    return StepAudit(kind="nonlinear", gamma=gamma, extra_evals=evals, accepted_ok=ok)


def tcs_run(dataset: GlmDataset, config: TcsConfig,
            method_name: Optional[str] = None) -> SolverTrace:
    """Full solver loop from alpha = 0, w = 0.

    Each iteration tosses the coin (nonlinear block with probability b),
    applies the corresponding closed-form step (stepsize 1 on the linear
    block, config.gamma or the Armijo search on the nonlinear block), and
    evaluates ||grad P(w)|| every eval_every iterations with the clock
    paused. Deterministic for a fixed seed.
    """
    config = _resolve_config(dataset, config)
    if method_name is None:
        method_name = "tcs_armijo" if config.line_search else "tcs"
    rng = np.random.default_rng(config.seed)
    state = TcsState.initial(dataset)
    n, d = dataset.n, dataset.d

    trace = SolverTrace(method=method_name, seed=config.seed)
    audits: List[StepAudit] = []
    passes = 0.0
    pass_linear = config.tau_d / d
    pass_nonlinear = config.tau_n / n
    t0 = time.perf_counter()
    paused = 0.0

    def evaluate(k: int) -> bool:
        nonlocal paused
        p0 = time.perf_counter()
        state.refresh_alpha_bar(dataset)
        gnorm = float(np.linalg.norm(glm_grad_P(state.w, dataset)))
        obj = dataset.objective(state.w)
        paused += time.perf_counter() - p0
        trace.records.append(EvalRecord(
            iteration=k, passes=passes, wallclock_s=time.perf_counter() - t0 - paused,
            grad_norm=gnorm, objective=obj))
        return gnorm <= config.tol

    status = "max_iters"
    k = 0
    for k in range(config.max_iters):
        if k % config.eval_every == 0:
            if evaluate(k):
                status = "converged"
                break
            if not np.isfinite(trace.records[-1].grad_norm) or \
                    trace.records[-1].grad_norm > DIVERGENCE_GUARD:
                status = "diverged"
                break
            if config.time_budget_s is not None and \
                    time.perf_counter() - t0 - paused > config.time_budget_s:
                status = "time_budget"
                break
        if rng.random() < config.b:
            B = floyd_subset(rng, n, config.tau_n)
            pieces = _prepare_nonlinear(state, dataset, B)
            if config.line_search is not None:
                audits.append(_armijo_nonlinear(state, dataset, pieces,
                                                config.line_search, config.audit))
            else:
                _apply_nonlinear(state, dataset, pieces, config.gamma)
                if config.audit:
                    audits.append(StepAudit("nonlinear", config.gamma, 0, True))
            passes += pass_nonlinear
        else:
            B = floyd_subset(rng, d, config.tau_d)
            tcs_linear_block_step(state, dataset, B, gamma=1.0)
            if config.audit:
                audits.append(StepAudit("linear", 1.0, 0, True))
            passes += pass_linear
    else:
        k = config.max_iters

    if status == "max_iters" and k == config.max_iters and evaluate(k):
        status = "converged"

    trace.status = status
    trace.iterations = k
    trace.final_x = state.as_vector()
    trace.audits = audits
    trace.final_state = state
    return trace


def tcs_armijo_run(dataset: GlmDataset, config: TcsConfig) -> SolverTrace:
    """tcs_run with the stochastic Armijo line search on the nonlinear block."""
    if config.line_search is None:
        config = TcsConfig(**{**config.__dict__, "line_search": ArmijoParams()})
    return tcs_run(dataset, config)
