"""Run traces shared by every solver loop."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np


@dataclass
class EvalRecord:
    """One metric evaluation, taken with the run's clock paused."""

    iteration: int
    passes: float
    wallclock_s: float
    grad_norm: float
    objective: float


@dataclass
class SolverTrace:
    method: str
    seed: int
    records: List[EvalRecord] = field(default_factory=list)
    status: str = "running"          # converged | max_iters | time_budget | diverged
    iterations: int = 0
    final_x: Optional[np.ndarray] = None
    # per-iteration sketched objective f_t(x^t) and residual norm, when the
    # solver computes them as step by-products
    f_history: Optional[np.ndarray] = None
    best_f: float = np.inf
    best_F_sq: float = np.inf
    # solver-specific extras
    audits: list = field(default_factory=list)
    final_state: object = None

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def check(self) -> None:
        """Internal consistency: monotone clock, nonnegative metrics."""
        last = -np.inf
        for r in self.records:
            assert r.wallclock_s >= last - 1e-9
            assert r.grad_norm >= 0
            last = r.wallclock_s
