"""Sketched Newton-type solvers for nonlinear systems and GLMs."""

from . import baselines, data_io, errors, harness, linalg, problems, sketches, snr, solvers, tcs
from .trace import EvalRecord, SolverTrace

__version__ = "0.1.0"

__all__ = [
    "baselines", "data_io", "errors", "harness", "linalg", "problems",
    "sketches", "snr", "solvers", "tcs", "EvalRecord", "SolverTrace",
]
