"""Benchmark harness: config loading, multi-method/multi-repeat runs,
MetricsRow CSV emission, and grid search over (b, gamma)."""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import yaml

from .baselines import BaselineConfig, sag_run, sgd_run, svrg_run
from .data_io import gen_artificial, parse_libsvm
from .errors import ConfigError
from .problems import GlmDataset
from .tcs import ArmijoParams, TcsConfig, b_preset, tcs_run
from .trace import SolverTrace

VERSION = "0.1.0"

CSV_HEADER = ["run_id", "method", "repeat", "iteration", "passes",
              "wallclock_s", "grad_norm", "objective", "seed"]

METHODS = ("tcs", "tcs_armijo", "sgd", "sag", "svrg")


@dataclass
class MethodSpec:
    name: str
    params: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    dataset_path: Optional[str] = None
    artificial: Optional[dict] = None       # {n, d, c, seed}
    lam: object = "1/n"
    methods: List[MethodSpec] = field(default_factory=list)
    repeats: int = 10
    tol: float = 1e-5
    time_budget_s: Optional[float] = None
    eval_every: int = 1000
    out_dir: str = "runs"
    base_seed: int = 0

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        cfg = cls()
        cfg.dataset_path = raw.get("dataset")
        if cfg.dataset_path == "artificial":
            cfg.dataset_path = None
        art_keys = {k: raw[k] for k in ("artificial_n", "artificial_d",
                                        "artificial_c", "artificial_seed") if k in raw}
        if art_keys:
            cfg.artificial = {k.removeprefix("artificial_"): v for k, v in art_keys.items()}
        if cfg.dataset_path is None and cfg.artificial is None:
            raise ConfigError("dataset", "need a dataset path or artificial_* keys")
        cfg.lam = raw.get("lambda", "1/n")
        cfg.repeats = int(raw.get("repeats", 10))
        if cfg.repeats < 1:
            raise ConfigError("repeats", "must be >= 1")
        cfg.tol = float(raw.get("tol", 1e-5))
        if "time_budget_s" in raw and raw["time_budget_s"] is not None:
            cfg.time_budget_s = float(raw["time_budget_s"])
        cfg.eval_every = int(raw.get("eval_every", 1000))
        cfg.out_dir = raw.get("out_dir", "runs")
        cfg.base_seed = int(raw.get("base_seed", 0))
        methods = raw.get("methods", [])
        if not methods:
            raise ConfigError("methods", "at least one method is required")
        for i, entry in enumerate(methods):
            if isinstance(entry, str):
                entry = {"name": entry}
            name = entry.get("name")
            if name not in METHODS:
                raise ConfigError(f"methods[{i}].name",
                                  f"unknown method {name!r}; valid: {METHODS}")
            cfg.methods.append(MethodSpec(name=name,
                                          params={k: v for k, v in entry.items() if k != "name"}))
        return cfg


def load_dataset(config: ExperimentConfig) -> GlmDataset:
    if config.dataset_path is not None:
        ds = parse_libsvm(config.dataset_path, lam=config.lam)
    else:
        art = config.artificial
        ds = gen_artificial(n=int(art.get("n", 1000)), d=int(art.get("d", 20)),
                            c=float(art.get("c", 0.9)), seed=int(art.get("seed", 0)),
                            lam=config.lam)
    return ds


def run_method(dataset: GlmDataset, spec: MethodSpec, seed: int, tol: float,
               eval_every: int, time_budget_s: Optional[float]) -> SolverTrace:
    """Dispatch one seeded run of a named method."""
    p = dict(spec.params)
    if spec.name in ("tcs", "tcs_armijo"):
        tau_d = int(p.pop("tau_d", dataset.d))
        tau_n = int(p.pop("tau_n", min(150, dataset.n)))
        b = p.pop("b", None)
        if isinstance(b, str):
            b = b_preset(b, dataset.n, min(tau_n, dataset.n))
        ls = None
        if spec.name == "tcs_armijo":
            ls = ArmijoParams(c=float(p.pop("c", 0.09)), beta=float(p.pop("beta", 0.9)),
                              gamma_init=float(p.pop("gamma_init", 2.0)))
        cfg = TcsConfig(tau_d=tau_d, tau_n=tau_n, b=b,
                        gamma=float(p.pop("gamma", 1.0)), tol=tol,
                        max_iters=int(p.pop("max_iters", 10 ** 6)),
                        eval_every=eval_every, seed=seed,
                        time_budget_s=time_budget_s, line_search=ls)
        if p:
            raise ConfigError(f"methods.{spec.name}", f"unknown keys {sorted(p)}")
        return tcs_run(dataset, cfg)
    runner = {"sgd": sgd_run, "sag": sag_run, "svrg": svrg_run}[spec.name]
    stepsize = p.pop("stepsize", None)
    if stepsize == "1/L":
        stepsize = None
    cfg = BaselineConfig(stepsize=None if stepsize is None else float(stepsize),
                         inner_loop=p.pop("inner_loop", None),
                         max_passes=float(p.pop("max_passes", 50.0)),
                         tol=tol, eval_every=eval_every, seed=seed,
                         time_budget_s=time_budget_s)
    if p:
        raise ConfigError(f"methods.{spec.name}", f"unknown keys {sorted(p)}")
    return runner(dataset, cfg)


def write_trace_csv(path: str, run_id: str, method: str, repeat: int,
                    seed: int, trace: SolverTrace) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in trace.records:
            writer.writerow([run_id, method, repeat, r.iteration,
                             f"{r.passes:.6f}", f"{r.wallclock_s:.6f}",
                             f"{r.grad_norm:.12e}", f"{r.objective:.12e}", seed])


@dataclass
class RunResult:
    run_id: str
    method: str
    repeat: int
    seed: int
    status: str
    iterations: int
    csv_path: str
    final_grad_norm: float
    error: Optional[str] = None


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> List[RunResult]:
    """Run every method x repeat, one CSV per run plus a manifest.

    Per-run failures are recorded, not fatal to sibling runs. Seeds are
    base_seed + repeat index, identical across methods so repeats are paired.
    """
    dataset = load_dataset(config)
    os.makedirs(config.out_dir, exist_ok=True)

    tasks = [(spec, rep) for spec in config.methods for rep in range(config.repeats)]

    def one(task) -> RunResult:
        spec, rep = task
        seed = config.base_seed + rep
        run_id = f"{spec.name}_r{rep}"
        csv_path = os.path.join(config.out_dir, f"{run_id}.csv")
        try:
            trace = run_method(dataset, spec, seed, config.tol,
                               config.eval_every, config.time_budget_s)
        except Exception as exc:  # recorded per-run, siblings continue
            return RunResult(run_id, spec.name, rep, seed, "error", 0, csv_path,
                             float("nan"), error=f"{type(exc).__name__}: {exc}")
        write_trace_csv(csv_path, run_id, spec.name, rep, seed, trace)
        final = trace.records[-1].grad_norm if trace.records else float("nan")
        return RunResult(run_id, spec.name, rep, seed, trace.status,
                         trace.iterations, csv_path, final)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, tasks))
    else:
        results = [one(t) for t in tasks]

    manifest = {
        "version": VERSION,
        "config": {
            "dataset": config.dataset_path or "artificial",
            "artificial": config.artificial,
            "lambda": config.lam,
            "repeats": config.repeats,
            "tol": config.tol,
            "time_budget_s": config.time_budget_s,
            "eval_every": config.eval_every,
            "base_seed": config.base_seed,
            "methods": [{"name": s.name, **s.params} for s in config.methods],
        },
        "runs": [{"run_id": r.run_id, "method": r.method, "repeat": r.repeat,
                  "seed": r.seed, "status": r.status, "csv": os.path.basename(r.csv_path),
                  "error": r.error} for r in results],
    }
    with open(os.path.join(config.out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
    return results


@dataclass
class GridCell:
    b: float
    gamma: float
    status: str
    iterations_to_tol: Optional[int]
    wallclock_s: float
    rank: Optional[int] = None


def grid_search(config: ExperimentConfig, bs: List[float], gammas: List[float],
                jobs: int = 1) -> List[GridCell]:
    """Run a TCS cell per (b, gamma); rank converged cells by iterations then time."""
    dataset = load_dataset(config)
    base = next((s for s in config.methods if s.name in ("tcs", "tcs_armijo")),
                MethodSpec(name="tcs"))
    cells_in = [(b, g) for b in bs for g in gammas]

    def one(cell) -> GridCell:
        b, g = cell
        spec = MethodSpec(name=base.name, params={**base.params, "b": b, "gamma": g})
        try:
            trace = run_method(dataset, spec, config.base_seed, config.tol,
                               config.eval_every, config.time_budget_s)
        except Exception:
            return GridCell(b, g, "error", None, float("inf"))
        it = trace.iterations if trace.status == "converged" else None
        wall = trace.records[-1].wallclock_s if trace.records else float("inf")
        return GridCell(b, g, trace.status, it, wall)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(one, cells_in))
    else:
        cells = [one(c) for c in cells_in]

    ranked = sorted((c for c in cells if c.iterations_to_tol is not None),
                    key=lambda c: (c.iterations_to_tol, c.wallclock_s))
    for i, c in enumerate(ranked):
        c.rank = i + 1

    os.makedirs(config.out_dir, exist_ok=True)
    with open(os.path.join(config.out_dir, "grid.csv"), "w", encoding="utf-8",
              newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["b", "gamma", "status", "iterations_to_tol", "wallclock_s", "rank"])
        for c in cells:
            writer.writerow([c.b, c.gamma, c.status,
                             "" if c.iterations_to_tol is None else c.iterations_to_tol,
                             f"{c.wallclock_s:.6f}", "" if c.rank is None else c.rank])
    return cells
