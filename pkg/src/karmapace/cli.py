"""Command-line entry points.

Exit codes: 0 success, 1 configuration error, 2 runtime error. Worker count
comes from --workers or the KARMAPACE_WORKERS environment variable.
"""

from __future__ import annotations

import csv
import sys
import time
from pathlib import Path

import click

from . import __version__
from ._backend import BACKEND, available_backends, get_kernels
from .experiments import (
    SpecError,
    bundled_spec_names,
    load_spec,
    run_experiment,
    validate_spec,
)
from .metrics import CheckStatus, fit_loglog_slope


class _ConfigError(click.ClickException):
    exit_code = 1


class _RuntimeError(click.ClickException):
    exit_code = 2


@click.group()
@click.version_option(__version__)
def main():
    """Karma-auction simulation experiments."""


@main.command("list-experiments")
def list_experiments():
    """List the bundled experiment specs."""
    for name in bundled_spec_names():
        click.echo(name)


def _load(spec_source: str) -> dict:
    try:
        return load_spec(spec_source)
    except (SpecError, FileNotFoundError, OSError) as exc:
        raise _ConfigError(str(exc)) from exc


@main.command()
@click.argument("spec_source")
@click.option(
    "--thorough",
    is_flag=True,
    help="Also estimate distribution-dependent quantities (stationary multiplier, derivative bound) by Monte Carlo",
)
def validate(spec_source, thorough):
    """Parse a spec, check its invariants, and print the design report."""
    path = Path(spec_source)
    if not path.is_file():
        spec = _load(spec_source)
    else:
        import yaml

        try:
            spec = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise _ConfigError(f"cannot parse {path}: {exc}") from exc
        if not isinstance(spec, dict):
            raise _ConfigError(f"{path} does not hold a mapping")
    errors, report = validate_spec(spec, thorough=thorough)
    for item in report:
        mark = {CheckStatus.PASS: "pass", CheckStatus.FAIL: "FAIL", CheckStatus.NOT_CHECKABLE: "n/a "}[item.status]
        click.echo(f"[{mark}] {item.name}: {item.detail}")
    if errors:
        raise _ConfigError("; ".join(errors))
    click.echo(f"{spec.get('name', spec_source)}: valid")


@main.command()
@click.argument("spec_source")
@click.option("--outdir", "-o", type=click.Path(), default=None, help="Output directory (default: results/<name>)")
@click.option("--workers", "-w", type=int, default=None, help="Worker processes (default: KARMAPACE_WORKERS or all cores)")
def run(spec_source, outdir, workers):
    """Run an experiment spec and write results.csv, slopes.csv, manifest.json."""
    spec = _load(spec_source)
    outdir = Path(outdir) if outdir else Path("results") / spec["name"]
    t0 = time.perf_counter()
    try:
        result = run_experiment(spec, outdir, workers)
    except SpecError as exc:
        raise _ConfigError(str(exc)) from exc
    except Exception as exc:  # simulation/runtime failure
        raise _RuntimeError(f"{type(exc).__name__}: {exc}") from exc
    click.echo(f"{spec['name']}: {len(result.rows)} result rows in {time.perf_counter() - t0:.1f}s -> {outdir}")
    for slope in result.slopes:
        click.echo(f"  slope {slope['stat_name']}: {slope['slope']:.3f} +- {slope['stderr']:.3f}")


@main.command("fit-slope")
@click.argument("results_csv", type=click.Path(exists=True))
@click.option("--stat", default=None, help="Restrict to one statistic name")
def fit_slope(results_csv, stat):
    """Fit log-log slopes of mean statistics over T from a results.csv."""
    series: dict[str, list[tuple[int, float]]] = {}
    with open(results_csv, newline="") as fh:
        for row in csv.DictReader(fh):
            name = row["stat_name"]
            if stat and name != stat:
                continue
            series.setdefault(name, []).append((int(row["T"]), float(row["mean"])))
    if not series:
        raise _ConfigError("no matching rows in the results file")
    printed = False
    for name in sorted(series):
        points = sorted(series[name])
        if len(points) < 3 or any(y <= 0 for _, y in points):
            continue
        slope, stderr = fit_loglog_slope(points)
        click.echo(f"{name}: slope {slope:.4f} +- {stderr:.4f} over {len(points)} points")
        printed = True
    if not printed:
        raise _ConfigError("no statistic had three or more positive points to fit")


@main.command()
@click.option("--horizon", "-T", type=int, default=20000)
@click.option("--agents", "-n", type=int, default=50)
@click.option("--repeats", "-r", type=int, default=3)
def benchmark(horizon, agents, repeats):
    """Time the compiled and pure-Python kernels on one population episode."""
    from . import _backend
    from .core import AgentParams, ContinuousUniform, HorizonPower, MechanismParams, RngContract
    from .sim import run_simultaneous
    from .strategies import KarmaPacing

    mech = MechanismParams(n_agents=agents, capacity=max(1, agents // 10), horizon=horizon)
    agent_list = [
        (AgentParams(3.0 * horizon**0.5, 5.0 if i % 2 else 6.0, step_size=HorizonPower(1.0, -0.5)), KarmaPacing())
        for i in range(agents)
    ]
    streams = RngContract(7)
    saved_kernels = _backend.kernels
    rows = []
    try:
        for name in available_backends():
            _backend.kernels = get_kernels(name)
            best = float("inf")
            for _ in range(repeats):
                t0 = time.perf_counter()
                trace = run_simultaneous(agent_list, ContinuousUniform(), mech, streams)
                best = min(best, time.perf_counter() - t0)
            rate = agents * horizon / best / 1e6
            rows.append((name, best, rate, float(trace.final_multiplier.mean())))
    finally:
        _backend.kernels = saved_kernels
    click.echo(f"active backend: {BACKEND}")
    click.echo(f"{'backend':<10} {'best time':>10} {'agent-rounds/s':>16} {'mean final mult':>16}")
    for name, best, rate, mean_mu in rows:
        click.echo(f"{name:<10} {best:>9.3f}s {rate:>14.1f}M {mean_mu:>16.4f}")
    if len(rows) == 2:
        click.echo(f"speedup: {rows[0][1] / rows[1][1]:.1f}x" if rows[1][1] < rows[0][1] else f"speedup: {rows[1][1] / rows[0][1]:.1f}x")


if __name__ == "__main__":
    sys.exit(main())
