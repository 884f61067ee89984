"""Command-line interface: solve, bench, datagen, inspect, grid."""

from __future__ import annotations

import sys

import click

from .data_io import dataset_report, gen_artificial, parse_libsvm, write_libsvm
from .harness import (ExperimentConfig, MethodSpec, METHODS, grid_search,
                      run_experiment, run_method, write_trace_csv)


@click.group()
def main():
    """Sketched Newton-type solvers and benchmark harness."""


def _load_data(data, n, d, c, seed, lam):
    if data is not None:
        return parse_libsvm(data, lam=lam)
    return gen_artificial(n=n, d=d, c=c, seed=seed, lam=lam)


@main.command()
@click.option("--method", type=click.Choice(METHODS), required=True)
@click.option("--data", type=click.Path(exists=True), default=None,
              help="LibSVM file; omit to use the artificial generator.")
@click.option("--n", default=2000, show_default=True)
@click.option("--d", default=20, show_default=True)
@click.option("--c", default=0.9, show_default=True)
@click.option("--data-seed", default=0, show_default=True)
@click.option("--lambda", "lam", default="1/n", show_default=True)
@click.option("--gamma", default=1.0, show_default=True)
@click.option("--tau-d", default=None, type=int)
@click.option("--tau-n", default=None, type=int)
@click.option("--b", default=None, type=str, help="Bernoulli parameter or preset name.")
@click.option("--stepsize", default=None, type=str, help="Baseline stepsize or '1/L'.")
@click.option("--max-passes", default=50.0, show_default=True)
@click.option("--max-iters", default=10 ** 6, show_default=True)
@click.option("--tol", default=1e-5, show_default=True)
@click.option("--eval-every", default=1000, show_default=True)
@click.option("--time-budget", default=None, type=float)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None, type=click.Path(), help="Metrics CSV path.")
def solve(method, data, n, d, c, data_seed, lam, gamma, tau_d, tau_n, b, stepsize,
          max_passes, max_iters, tol, eval_every, time_budget, seed, out):
    """Run one method on one dataset."""
    dataset = _load_data(data, n, d, c, data_seed, lam)
    params = {}
    if method in ("tcs", "tcs_armijo"):
        params["gamma"] = gamma
        params["max_iters"] = max_iters
        if tau_d is not None:
            params["tau_d"] = tau_d
        if tau_n is not None:
            params["tau_n"] = tau_n
        if b is not None:
            try:
                params["b"] = float(b)
            except ValueError:
                params["b"] = b
    else:
        if stepsize is not None:
            params["stepsize"] = stepsize
        params["max_passes"] = max_passes
    trace = run_method(dataset, MethodSpec(name=method, params=params), seed,
                       tol, eval_every, time_budget)
    last = trace.records[-1] if trace.records else None
    click.echo(f"status={trace.status} iterations={trace.iterations}"
               + (f" grad_norm={last.grad_norm:.3e} passes={last.passes:.2f}"
                  f" wallclock_s={last.wallclock_s:.3f}" if last else ""))
    if out:
        write_trace_csv(out, f"{method}_r0", method, 0, seed, trace)
        click.echo(f"wrote {out}")
    sys.exit(0 if trace.status != "diverged" else 1)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--jobs", default=1, show_default=True)
def bench(config_path, jobs):
    """Run every method x repeat from a config file; exit 0 iff none diverged."""
    config = ExperimentConfig.from_file(config_path)
    results = run_experiment(config, jobs=jobs)
    bad = 0
    for r in results:
        click.echo(f"{r.run_id}: {r.status} ({r.iterations} iterations)"
                   + (f" [{r.error}]" if r.error else ""))
        if r.status in ("diverged", "error"):
            bad += 1
    click.echo(f"{len(results) - bad}/{len(results)} runs ok; output in {config.out_dir}/")
    sys.exit(0 if bad == 0 else 1)


@main.command()
@click.option("--artificial", is_flag=True, required=True)
@click.option("--n", default=10000, show_default=True)
@click.option("--d", default=50, show_default=True)
@click.option("--c", default=0.9, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def datagen(artificial, n, d, c, seed, out):
    """Generate the Toeplitz-correlated artificial dataset as a LibSVM file."""
    dataset = gen_artificial(n=n, d=d, c=c, seed=seed)
    write_libsvm(dataset, out)
    click.echo(f"wrote {out} (n={n}, d={d}, c={c}, seed={seed})")


@main.command()
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--lambda", "lam", default="1/n", show_default=True)
def inspect(data, lam):
    """Print the dataset report (size, sparsity, conditioning)."""
    report = dataset_report(parse_libsvm(data, lam=lam))
    click.echo(f"n                = {report.n}")
    click.echo(f"d                = {report.d}")
    click.echo(f"nnz              = {report.nnz}")
    click.echo(f"density          = {report.density:.6f}")
    click.echo(f"lambda_max(AA^T) = {report.lambda_max_AAt:.6e}")
    click.echo(f"condition_number = {report.condition_number:.6e}")
    click.echo(f"smoothness_L     = {report.smoothness_L:.6e}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--jobs", default=1, show_default=True)
def grid(config_path, jobs):
    """Grid search over (b, gamma) from a config file with grid_b / grid_gamma keys."""
    import yaml
    with open(config_path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    bs = [float(x) for x in raw.get("grid_b", [])]
    gammas = [float(x) for x in raw.get("grid_gamma", [])]
    if not bs or not gammas:
        raise click.ClickException("config needs non-empty grid_b and grid_gamma lists")
    config = ExperimentConfig.from_dict(raw)
    cells = grid_search(config, bs, gammas, jobs=jobs)
    for c in sorted(cells, key=lambda c: (c.rank is None, c.rank or 0)):
        it = "-" if c.iterations_to_tol is None else str(c.iterations_to_tol)
        rk = "-" if c.rank is None else str(c.rank)
        click.echo(f"b={c.b:.4f} gamma={c.gamma:.2f} status={c.status} "
                   f"iters={it} wall={c.wallclock_s:.3f}s rank={rk}")
    click.echo(f"grid written to {config.out_dir}/grid.csv")


if __name__ == "__main__":
    main()
