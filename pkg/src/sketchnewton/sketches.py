"""Sketch distributions and their sampled realizations.

A sketch realization S is an m x tau matrix applied to the residual F and,
through the system's sketched-Jacobian oracle, to DF. Structured realizations
(index subsets, the GLM coin blocks, the stochastic-Newton block sketch)
expose their action without densifying; `matrix()` materializes S for
verification at test scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import BadSubset, EmptyDistribution, InvalidTau
from .problems import NonlinearSystem


def floyd_subset(rng: np.random.Generator, n: int, tau: int) -> np.ndarray:
    """Uniformly random tau-subset of {0, ..., n-1} by Floyd's algorithm."""
    if not 1 <= tau <= n:
        raise InvalidTau(f"tau={tau} outside [1, {n}]")
    chosen: set[int] = set()
    for j in range(n - tau, n):
        t = int(rng.integers(0, j + 1))
        chosen.add(j if t in chosen else t)
    return np.array(sorted(chosen), dtype=np.int64)


# ---------------------------------------------------------------------------
# Realizations
# ---------------------------------------------------------------------------

class SketchRealization:
    """Base class: an m x tau sketching matrix with structured actions."""

    m: int
    tau: int

    def st_dot(self, v: np.ndarray) -> np.ndarray:
        """S^T @ v for v of length m (or a matrix with m rows)."""
        raise NotImplementedError

    def matrix(self) -> np.ndarray:
        """Dense m x tau form (verification only)."""
        raise NotImplementedError


class IdentityRealization(SketchRealization):
    def __init__(self, m: int):
        self.m = m
        self.tau = m

    def st_dot(self, v):
        return np.asarray(v)

    def matrix(self):
        return np.eye(self.m)


class ColumnIndicesRealization(SketchRealization):
    """S = I_B, the identity columns indexed by a sorted subset B.

    `tag` distinguishes the two tossing-coin block forms; `local` holds the
    subset in block-local coordinates for those.
    """

    def __init__(self, m: int, indices: np.ndarray, tag: Optional[str] = None,
                 local: Optional[np.ndarray] = None):
        indices = np.asarray(indices, dtype=np.int64)
        if indices.size == 0:
            raise BadSubset("empty index subset")
        if (np.diff(indices) <= 0).any() or indices[0] < 0 or indices[-1] >= m:
            raise BadSubset("indices must be sorted, distinct, in range")
        self.m = m
        self.tau = int(indices.size)
        self.indices = indices
        self.tag = tag
        self.local = local

    def st_dot(self, v):
        return np.asarray(v)[self.indices]

    def matrix(self):
        S = np.zeros((self.m, self.tau))
        S[self.indices, np.arange(self.tau)] = 1.0
        return S


class DenseBlockRealization(SketchRealization):
    def __init__(self, S: np.ndarray):
        S = np.asarray(S, dtype=np.float64)
        self.m, self.tau = S.shape
        self.S = S

    def st_dot(self, v):
        return self.S.T @ v

    def matrix(self):
        return self.S


class SnmBlockRealization(SketchRealization):
    """Block sketch for the variable-splitting system, (n+1)d x (tau+1)d.

    First column block: identity on the w rows stacked over the scaled
    Hessians (1/n) hess_i on every alpha_i row block. Remaining tau column
    blocks: identity on the alpha_i rows for each i in B_n.
    """

    def __init__(self, d: int, n: int, B_n: np.ndarray, scaled_hessians: Sequence[np.ndarray]):
        B_n = np.asarray(B_n, dtype=np.int64)
        if (np.diff(B_n) <= 0).any() if B_n.size > 1 else False:
            raise BadSubset("B_n must be sorted and distinct")
        if B_n.size == 0 or B_n[0] < 0 or B_n[-1] >= n:
            raise BadSubset("B_n out of range")
        if len(scaled_hessians) != n:
            raise BadSubset("need one scaled Hessian per summand")
        self.d, self.n = d, n
        self.B_n = B_n
        self.scaled_hessians = [np.asarray(H, dtype=np.float64) for H in scaled_hessians]
        self.m = (n + 1) * d
        self.tau = (B_n.size + 1) * d

    def st_dot(self, v):
        d, n = self.d, self.n
        v = np.asarray(v)
        v0 = v[:d]
        out_first = np.asarray(v0, dtype=np.float64).copy()
        for i in range(n):
            out_first = out_first + self.scaled_hessians[i].T @ v[d * (i + 1): d * (i + 2)]
        parts = [out_first]
        for i in self.B_n:
            parts.append(v[d * (i + 1): d * (i + 2)])
        return np.concatenate(parts, axis=0)

    def matrix(self):
        d, n = self.d, self.n
        S = np.zeros((self.m, self.tau))
        S[:d, :d] = np.eye(d)
        for i in range(n):
            S[d * (i + 1): d * (i + 2), :d] = self.scaled_hessians[i]
        for k, i in enumerate(self.B_n):
            S[d * (i + 1): d * (i + 2), d * (k + 1): d * (k + 2)] = np.eye(d)
        return S


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Identity:
    pass


@dataclass(frozen=True)
class SingleRow:
    """e_i with probability weights[i]; uniform when weights is None."""

    weights: Optional[np.ndarray] = None


@dataclass(frozen=True)
class UniformSubsample:
    tau: int


@dataclass(frozen=True)
class Gaussian:
    """i.i.d. N(0, 1/tau) entries, so E[S S^T] = I."""

    tau: int


@dataclass(frozen=True)
class Block:
    """Uniform tau-subset of n equal coordinate blocks (m divisible by n)."""

    n: int
    tau: int


@dataclass(frozen=True)
class TossingCoin:
    """GLM two-block sketch: nonlinear block with probability b, linear with 1-b."""

    b: float
    tau_d: int
    tau_n: int
    d: int
    n: int

    def __post_init__(self):
        if not 0.0 < self.b < 1.0:
            raise ValueError("Bernoulli parameter b must lie strictly in (0, 1)")


@dataclass(frozen=True)
class SnmStructured:
    """Block sketch built from the current alpha_i Hessians of a split system."""

    tau: int
    d: int
    losses: tuple = field(default=())


@dataclass(frozen=True)
class Adapted:
    """S = DF(x)^T S_hat with S_hat drawn from `base` over the input dimension."""

    base: object


def sample(dist, rng: np.random.Generator, system: Optional[NonlinearSystem] = None,
           x: Optional[np.ndarray] = None, m: Optional[int] = None) -> SketchRealization:
    """Draw one realization of `dist`.

    `m` (or `system.m`) fixes the row count; state-dependent kinds also need
    the current iterate x.
    """
    if m is None:
        if system is None:
            raise EmptyDistribution("need the system or an explicit m to sample")
        m = system.m

    if isinstance(dist, Identity):
        return IdentityRealization(m)

    if isinstance(dist, SingleRow):
        if dist.weights is None:
            i = int(rng.integers(0, m))
        else:
            w = np.asarray(dist.weights, dtype=np.float64)
            if w.shape != (m,) or (w < 0).any() or not np.isclose(w.sum(), 1.0):
                raise EmptyDistribution("SingleRow weights must be a length-m distribution")
            i = int(rng.choice(m, p=w))
        return ColumnIndicesRealization(m, np.array([i]))

    if isinstance(dist, UniformSubsample):
        if dist.tau > m:
            raise InvalidTau(f"tau={dist.tau} > m={m}")
        return ColumnIndicesRealization(m, floyd_subset(rng, m, dist.tau))

    if isinstance(dist, Gaussian):
        if dist.tau < 1:
            raise InvalidTau("tau must be >= 1")
        S = rng.standard_normal((m, dist.tau)) / np.sqrt(dist.tau)
        return DenseBlockRealization(S)

    if isinstance(dist, Block):
        if m % dist.n != 0:
            raise InvalidTau(f"m={m} not divisible into {dist.n} blocks")
        size = m // dist.n
        blocks = floyd_subset(rng, dist.n, dist.tau)
        idx = np.concatenate([np.arange(b * size, (b + 1) * size) for b in blocks])
        return ColumnIndicesRealization(m, idx)

    if isinstance(dist, TossingCoin):
        if m != dist.d + dist.n:
            raise InvalidTau(f"m={m} but d+n={dist.d + dist.n}")
        if rng.random() < dist.b:
            B = floyd_subset(rng, dist.n, dist.tau_n)
            return ColumnIndicesRealization(m, dist.d + B, tag="coin_nonlinear", local=B)
        B = floyd_subset(rng, dist.d, dist.tau_d)
        return ColumnIndicesRealization(m, B, tag="coin_linear", local=B)

    if isinstance(dist, SnmStructured):
        if x is None:
            raise EmptyDistribution("SnmStructured needs the current iterate")
        d = dist.d
        n = len(dist.losses)
        alphas = [x[d * (i + 1): d * (i + 2)] for i in range(n)]
        B_n = floyd_subset(rng, n, dist.tau)
        return snm_sketch(alphas, [loss.hess(a) for loss, a in zip(dist.losses, alphas)], B_n)

    if isinstance(dist, Adapted):
        if system is None or x is None:
            raise EmptyDistribution("Adapted needs the system and iterate")
        S_hat = sample(dist.base, rng, m=system.p).matrix()
        S = system.df_full(x).T @ S_hat
        return DenseBlockRealization(S)

    raise EmptyDistribution(f"unknown sketch distribution {dist!r}")


def snm_sketch(alphas: Sequence[np.ndarray], hessians: Sequence[np.ndarray],
               B_n: np.ndarray) -> SnmBlockRealization:
    """Structured sketch for the split system from current Hessians and a subset."""
    n = len(alphas)
    d = int(np.atleast_1d(alphas[0]).size)
    scaled = [np.atleast_2d(H) / n for H in hessians]
    return SnmBlockRealization(d=d, n=n, B_n=np.asarray(B_n, dtype=np.int64), scaled_hessians=scaled)


def estimate_E_SST(dist, m: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Monte Carlo average of S S^T over `samples` draws."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    acc = np.zeros((m, m))
    for _ in range(samples):
        real = sample(dist, rng, m=m)
        if isinstance(real, ColumnIndicesRealization):
            acc[real.indices, real.indices] += 1.0
        else:
            S = real.matrix()
            acc += S @ S.T
    return acc / samples
