"""Dataset ingestion, the synthetic Toeplitz generator, and model diagnostics."""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.linalg

from .errors import BadParameter, MalformedLine, NonBinaryLabels, NonMonotoneIndex
from .linalg import SparseMatrix, lambda_max
from .problems import GlmDataset


def _map_labels(raw: np.ndarray) -> np.ndarray:
    """Normalize labels to {-1, +1}; 0 maps to -1, any other two-class pair by order."""
    distinct = sorted(set(raw.tolist()))
    if len(distinct) > 2:
        raise NonBinaryLabels(f"found {len(distinct)} distinct labels: {distinct[:5]}...")
    if set(distinct) <= {-1.0, 0.0, 1.0}:
        return np.where(raw == 0.0, -1.0, raw)
    if len(distinct) == 2:
        return np.where(raw == distinct[0], -1.0, 1.0)
    return np.ones_like(raw)


def parse_libsvm(source: Union[str, io.IOBase], lam: Union[float, str] = "1/n",
                 d_override: int = None) -> GlmDataset:
    """Parse LibSVM text: `label idx:val idx:val ...` per line.

    Indices are 1-based and must be strictly increasing within a line;
    anything after `#` is a comment; d is the maximum index seen unless
    overridden. Labels are normalized to {-1, +1}.
    """
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    else:
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        lines = data.splitlines()

    labels: list[float] = []
    triplets: list[tuple[int, int, float]] = []
    d_max = 0
    sample = 0
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError as exc:
            raise MalformedLine(lineno, f"bad label {tokens[0]!r}") from exc
        prev = 0
        for tok in tokens[1:]:
            if ":" not in tok:
                raise MalformedLine(lineno, f"expected idx:val, got {tok!r}")
            idx_s, val_s = tok.split(":", 1)
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError as exc:
                raise MalformedLine(lineno, f"bad feature {tok!r}") from exc
            if idx < 1:
                raise MalformedLine(lineno, f"index {idx} is not 1-based")
            if idx <= prev:
                raise NonMonotoneIndex(lineno, f"index {idx} after {prev}")
            prev = idx
            d_max = max(d_max, idx)
            triplets.append((idx - 1, sample, val))
        labels.append(label)
        sample += 1

    n = sample
    d = d_override if d_override is not None else d_max
    y = _map_labels(np.asarray(labels, dtype=np.float64))
    A = SparseMatrix(d, n, triplets)
    lam_val = 1.0 / n if (lam == "1/n" and n > 0) else (1.0 if n == 0 else float(lam))
    return GlmDataset(A=A, y=y, lam=lam_val)


def _format_value(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(float(v))


def write_libsvm(dataset: GlmDataset, path: str) -> None:
    """Emit the LibSVM grammar: ascending 1-based indices, zeros omitted,
    values in shortest round-trippable decimal form, \\n line endings."""
    if isinstance(dataset.A, SparseMatrix):
        csc = dataset.A.csc
        cols = [(csc.indices[csc.indptr[i]:csc.indptr[i + 1]],
                 csc.data[csc.indptr[i]:csc.indptr[i + 1]]) for i in range(dataset.n)]
    else:
        cols = []
        for i in range(dataset.n):
            col = dataset.A[:, i]
            nz = np.flatnonzero(col)
            cols.append((nz, col[nz]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i in range(dataset.n):
            label = "+1" if dataset.y[i] > 0 else "-1"
            idx, vals = cols[i]
            order = np.argsort(idx)
            feats = " ".join(f"{int(idx[j]) + 1}:{_format_value(float(vals[j]))}"
                             for j in order if vals[j] != 0.0)
            fh.write(f"{label} {feats}\n" if feats else f"{label}\n")


def gen_artificial(n: int, d: int, c: float, seed: int,
                   lam: Union[float, str] = "1/n") -> GlmDataset:
    """Synthetic binary-classification data with Toeplitz-correlated features.

    Columns of A are N(0, T) with T_ij = c^{|i-j|}; the planted weight is
    w_j = (-1)^j e^{-j/10} and y = sign(A^T w + noise). Deterministic per seed.
    """
    if not 0.0 <= c < 1.0:
        raise BadParameter(f"c={c} outside [0, 1)")
    if n < 1 or d < 1:
        raise BadParameter("n and d must be >= 1")
    rng = np.random.default_rng(seed)
    T = scipy.linalg.toeplitz(c ** np.arange(d))
    L = np.linalg.cholesky(T)
    A = L @ rng.standard_normal((d, n))
    w = (-1.0) ** np.arange(d) * np.exp(-np.arange(d) / 10.0)
    r = rng.standard_normal(n)
    y = np.where(A.T @ w + r >= 0.0, 1.0, -1.0)
    lam_val = 1.0 / n if lam == "1/n" else float(lam)
    return GlmDataset(A=A, y=y, lam=lam_val)


@dataclass
class DatasetReport:
    n: int
    d: int
    nnz: int
    density: float
    lambda_max_AAt: float
    condition_number: float
    smoothness_L: float


def dataset_report(dataset: GlmDataset, tol: float = 1e-10, seed: int = 0) -> DatasetReport:
    """Size, sparsity, and the logistic-regression conditioning diagnostics.

    condition_number = lambda_max(A A^T)/(4 n lambda) + 1 and
    smoothness_L = lambda_max(A A^T)/(4 n) + lambda.
    """
    n, d = dataset.n, dataset.d
    if n < 1:
        raise BadParameter("dataset is empty")
    if isinstance(dataset.A, SparseMatrix):
        nnz = dataset.A.nnz
    else:
        nnz = int(np.count_nonzero(dataset.A))
    est = lambda_max(lambda v: dataset.A_dot(dataset.At_dot(v)), d,
                     tol=tol, max_iter=200000, seed=seed)
    lam_max = est.value
    return DatasetReport(
        n=n, d=d, nnz=nnz, density=nnz / (n * d),
        lambda_max_AAt=lam_max,
        condition_number=lam_max / (4.0 * n * dataset.lam) + 1.0,
        smoothness_L=lam_max / (4.0 * n) + dataset.lam,
    )
