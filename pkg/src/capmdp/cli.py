"""Command-line front end.

Subcommands: ``generate`` (instance files), ``solve`` (exact / padp /
stationary), ``evaluate`` (a strategy against an instance, with the
valid-inequality diagnostics), and ``analyze`` (EVSS / EVPI / flexibility /
capacity sweeps, with CSV output and optional figures).

Exit codes: 0 ok, 2 input error, 3 infeasible, 4 limit exceeded.  Payload
files are byte-reproducible for a fixed seed; timing lives only in the
sidecar manifest (<output>.manifest.json).
"""

from __future__ import annotations

import csv
import json
import os
import sys
import time
from importlib.metadata import version as pkg_version

import click
import numpy as np

from . import analysis, generator, model, padp
from .evaluate import check_proposition1, check_proposition2, evaluate_strategy
from .exact import solve_exact, solve_exact_stationary

EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_LIMIT = 4


def _tool_version() -> str:
    try:
        return pkg_version("capmdp")
    except Exception:
        return "unknown"


def _resolve_seed(flag_value) -> int:
    if flag_value is not None:
        return int(flag_value)
    env = os.environ.get("CAPMDP_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise click.UsageError(f"CAPMDP_SEED={env!r} is not an integer")
    return 0


def _write_manifest(output_path, command: str, config: dict, seed, elapsed: float):
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "tool_version": _tool_version(),
        "wall_clock_seconds": elapsed,
        "outputs": [str(output_path)],
    }
    with open(f"{output_path}.manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")


def _load_instance_or_die(path):
    try:
        return model.load_instance(path)
    except model.SchemaError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)


@click.group()
def main():
    """Capacity-constrained multi-model MDP toolkit."""


@main.command()
@click.option("--scenarios", type=int, required=True, help="Number of scenarios.")
@click.option("--T", "horizon", type=int, required=True, help="Number of periods (epochs are 1..T-1).")
@click.option("--c", "capacity_fraction", type=float, required=True, help="Capacity fraction of N per epoch.")
@click.option("--epsilon", type=float, required=True, help="Uniform noise radius around the nominal.")
@click.option("--seed", type=int, default=None, help="RNG seed (default: CAPMDP_SEED env var, then 0).")
@click.option("--population", "-N", type=int, default=generator.DEFAULT_POPULATION, show_default=True)
@click.option("--mc-iterations", type=int, default=generator.DEFAULT_MC_ITERATIONS, show_default=True,
              help="Monte Carlo draws for the nominal model.")
@click.option("--states", type=int, default=None,
              help="Use the unrestricted random-MDP mode with this many states "
                   "(default: the 6-state chronic-care model).")
@click.option("--output", "-o", type=click.Path(), default="instance.json", show_default=True)
def generate(scenarios, horizon, capacity_fraction, epsilon, seed, population, mc_iterations, states, output):
    """Generate an instance file."""
    seed = _resolve_seed(seed)
    t0 = time.monotonic()
    try:
        params = model.InstanceParams(
            n_scenarios=scenarios,
            horizon=horizon,
            capacity_fraction=capacity_fraction,
            noise_radius=epsilon,
            seed=seed,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))
    try:
        if states is None:
            inst = generator.chronic_care_instance(params, population=population, n_mc_iterations=mc_iterations)
        else:
            inst = generator.random_instance(states, params, population=population)
    except generator.RejectionLimitExceeded as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    report = model.validate_instance(inst)
    if report:
        click.echo("error: generated instance failed validation: " + "; ".join(report), err=True)
        sys.exit(EXIT_INPUT)
    model.save_instance(inst, output)
    _write_manifest(
        output,
        "generate",
        {
            "n_scenarios": scenarios,
            "T": horizon,
            "c": capacity_fraction,
            "epsilon": epsilon,
            "N": population,
            "n_mc_iterations": mc_iterations,
            "states": states,
        },
        seed,
        time.monotonic() - t0,
    )
    click.echo(f"wrote {output}")


@main.command()
@click.argument("instance", type=click.Path(exists=True))
@click.option("--method", type=click.Choice(["exact", "padp", "stationary"]), default="exact", show_default=True)
@click.option("--max-nodes", type=int, default=None)
@click.option("--max-seconds", type=float, default=None)
@click.option("--output", "-o", type=click.Path(), default="solution.json", show_default=True)
def solve(instance, method, max_nodes, max_seconds, output):
    """Solve an instance and write the result."""
    inst = _load_instance_or_die(instance)
    t0 = time.monotonic()
    if method == "padp":
        res = padp.solve_padp(inst)
        payload = res.to_dict()
        status = res.status
    else:
        fn = solve_exact if method == "exact" else solve_exact_stationary
        res = fn(inst, max_nodes=max_nodes, max_seconds=max_seconds)
        payload = res.to_dict()
        status = res.status
    elapsed = time.monotonic() - t0
    with open(output, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    _write_manifest(
        output,
        "solve",
        {"instance": str(instance), "method": method, "max_nodes": max_nodes, "max_seconds": max_seconds,
         "nodes": payload.get("nodes_explored")},
        None,
        elapsed,
    )
    click.echo(f"{method}: status={status} value={payload.get('f_star', payload.get('f_padp'))}")
    if status == "Infeasible":
        sys.exit(EXIT_INFEASIBLE)
    if status == "LimitExceeded":
        sys.exit(EXIT_LIMIT)


@main.command()
@click.argument("instance", type=click.Path(exists=True))
@click.argument("strategy", type=click.Path(exists=True))
@click.option("--trajectory/--no-trajectory", default=False, help="Include occupancy measures in the output.")
@click.option("--output", "-o", type=click.Path(), default="evaluation.json", show_default=True)
def evaluate(instance, strategy, trajectory, output):
    """Evaluate a strategy file against an instance."""
    inst = _load_instance_or_die(instance)
    try:
        strat = model.load_strategy(strategy)
    except model.SchemaError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    t0 = time.monotonic()
    try:
        res = evaluate_strategy(inst, strat)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    payload = res.to_dict(include_trajectory=trajectory)
    payload["proposition1_max_deviation"] = check_proposition1(inst, res.trajectory)
    payload["proposition2_min_slack"] = float(check_proposition2(inst, res.trajectory).min())
    with open(output, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    _write_manifest(output, "evaluate", {"instance": str(instance), "strategy": str(strategy)},
                    None, time.monotonic() - t0)
    click.echo(
        f"U={res.total_reward} feasible={res.feasible} "
        f"vi1_dev={payload['proposition1_max_deviation']:.3g} "
        f"vi2_slack={payload['proposition2_min_slack']:.3g}"
    )


def _report_csv_rows(suite: str, report) -> list[list]:
    rows = []
    for d in report.per_scenario:
        rows.append(["scenario", d.scenario, d.wait_and_see_value, d.repaired_value, d.repair_distance, ""])
    for c, f in report.sweep:
        rows.append(["sweep", "", "", "", "", f"{c}:{f}"])
    for name, val in (
        ("f_mip_mmdp", report.here_and_now_value),
        ("evss_percent", report.evss_percent),
        ("evpi_absolute", report.evpi_absolute),
        ("evpi_percent", report.evpi_percent),
        ("flexibility_percent", report.flexibility_percent),
    ):
        if val is not None:
            rows.append(["summary", "", "", "", "", f"{name}={val}"])
    return rows


@main.command()
@click.argument("instance", type=click.Path(exists=True))
@click.option("--suite", type=click.Choice(["evss", "evpi", "flexibility", "sweep", "all"]),
              default="all", show_default=True)
@click.option("--solver", type=click.Choice(["exact", "padp"]), default="exact", show_default=True)
@click.option("--grid", default="0.2:0.8:0.1", show_default=True,
              help="Capacity sweep grid as start:stop:step (inclusive).")
@click.option("--plot/--no-plot", default=False, help="Also render figures next to the CSV.")
@click.option("--outdir", "-o", type=click.Path(), default="analysis", show_default=True)
def analyze(instance, suite, solver, grid, plot, outdir):
    """Run a stochastic-value analysis suite and write JSON + CSV reports."""
    inst = _load_instance_or_die(instance)
    try:
        start, stop, step = (float(x) for x in grid.split(":"))
        c_grid = [round(start + k * step, 10) for k in range(int(round((stop - start) / step)) + 1)]
    except ValueError:
        raise click.UsageError(f"bad grid {grid!r}; expected start:stop:step")
    os.makedirs(outdir, exist_ok=True)
    suites = ["evss", "evpi", "flexibility", "sweep"] if suite == "all" else [suite]
    t0 = time.monotonic()
    try:
        for name in suites:
            if name == "evss":
                report = analysis.compute_evss(inst, solver)
            elif name == "evpi":
                report = analysis.compute_evpi(inst, solver)
            elif name == "flexibility":
                report = analysis.compute_flexibility(inst, solver)
            else:
                report = analysis.capacity_sweep(inst, c_grid, solver)
            json_path = os.path.join(outdir, f"{name}.json")
            with open(json_path, "w") as fh:
                json.dump(report.to_dict(), fh, indent=1)
                fh.write("\n")
            csv_path = os.path.join(outdir, f"{name}.csv")
            with open(csv_path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["record", "scenario", "f_omega", "f_omega_under_all",
                                 "repair_distance", "value"])
                writer.writerows(_report_csv_rows(name, report))
            if plot:
                from . import plots

                if name == "sweep":
                    plots.plot_capacity_sweep(report.sweep, os.path.join(outdir, "sweep.png"))
                elif report.per_scenario:
                    plots.plot_per_scenario_values(
                        report, os.path.join(outdir, f"{name}.png"),
                        title=f"{name.upper()} per-scenario values",
                    )
            _write_manifest(json_path, "analyze",
                            {"instance": str(instance), "suite": name, "solver": solver, "grid": grid},
                            None, time.monotonic() - t0)
    except analysis.InfeasibleInstance as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INFEASIBLE)
    click.echo(f"reports written to {outdir}")


if __name__ == "__main__":
    main()
