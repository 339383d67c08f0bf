"""Command-line entry point.

Subcommands: calibrate (optional truncation + stochastic ruler search),
truncate (truncation only), simulate (single simulator replications),
bench (synthetic verification suite), validate (config checking only).
"""
from __future__ import annotations

import dataclasses
import sys
from pathlib import Path

import click
import yaml

from . import harness
from .config import (
    ConfigError,
    RunConfig,
    default_config_dict,
    load_config,
    parse_config,
    validate_config,
)
from .objective import CalibrationTargets
from .ruler import MT_COMMENTED, MT_TEXT, StochasticRuler
from .seeding import derive_seed
from .space import DiscreteSpace
from .truncation import truncate as run_truncate

EXIT_CONFIG_ERROR = 2


def _load(config_path: str | None) -> RunConfig:
    if config_path is None:
        config, report = parse_config(default_config_dict())
        if not report.ok:
            raise ConfigError(report.format())
        return config
    return load_config(config_path)


def _apply_overrides(config: RunConfig, **over) -> RunConfig:
    ruler = config.ruler
    ruler_updates = {}
    for key in ("a", "b", "budget", "mt_schedule", "start"):
        if over.get(key) is not None:
            ruler_updates[key] = over[key]
    if over.get("delta"):
        ruler_updates["deltas"] = tuple(over["delta"])
    if over.get("estimate_b"):
        ruler_updates["b"] = None
    if ruler_updates:
        ruler = dataclasses.replace(ruler, **ruler_updates)
    sst = config.sst
    if over.get("sst") is not None:
        sst = dataclasses.replace(sst, enabled=over["sst"])
    if over.get("sst_replicates") is not None:
        sst = dataclasses.replace(sst, replicates=over["sst_replicates"])
    updates = {"ruler": ruler, "sst": sst}
    for key in ("master_seed", "output_dir", "n_jobs", "k_replicates"):
        if over.get(key) is not None:
            updates[key] = over[key]
    return dataclasses.replace(config, **updates)


@click.group()
def main():
    """Simulation-model calibration by stochastic ruler search over a
    discrete parameter lattice, with optional monotonicity-based
    solution-space truncation."""


config_option = click.option("--config", "config_path", type=click.Path(exists=True),
                             default=None, help="YAML run configuration.")
seed_option = click.option("--seed", "master_seed", type=int, default=None,
                           envvar="RULERCAL_SEED", help="Master seed override.")
out_option = click.option("--out", "output_dir", type=click.Path(), default=None,
                          envvar="RULERCAL_OUTPUT", help="Output directory override.")


@main.command()
@config_option
@seed_option
@out_option
@click.option("--a", type=float, default=None, help="Lower ruler bound.")
@click.option("--b", type=float, default=None, help="Upper ruler bound.")
@click.option("--estimate-b", is_flag=True, help="Estimate b from the lattice extremes.")
@click.option("--delta", type=float, multiple=True, help="Stop threshold(s); repeatable.")
@click.option("--budget", type=int, default=None, help="Iteration budget T.")
@click.option("--mt-form", "mt_schedule", type=click.Choice([MT_TEXT, MT_COMMENTED]),
              default=None, help="Test-count schedule form.")
@click.option("--start", type=str, default=None,
              help="Start point: xl, xr, or comma-separated axis indices.")
@click.option("--sst/--no-sst", "sst", default=None,
              help="Run the solution-space truncation pre-pass.")
@click.option("--sst-replicates", type=int, default=None,
              help="Replicates per truncation evaluation.")
@click.option("--jobs", "n_jobs", type=int, default=None, help="Parallel replications.")
def calibrate(config_path, **overrides):
    """Calibrate: optional truncation pre-pass, then stochastic ruler search."""
    try:
        config = _apply_overrides(_load(config_path), **overrides)
    except ConfigError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    result = harness.run_calibration(config, out_dir=config.output_dir)
    click.echo(harness.format_summary(result))
    click.echo(f"artifacts written to {config.output_dir}")
    sys.exit(result.exit_code)


@main.command()
@config_option
@seed_option
@out_option
@click.option("--sst-replicates", type=int, default=None)
def truncate(config_path, master_seed, output_dir, sst_replicates):
    """Run only the solution-space truncation and report survivors."""
    try:
        config = _apply_overrides(_load(config_path), master_seed=master_seed,
                                  output_dir=output_dir, sst_replicates=sst_replicates)
    except ConfigError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    oracle = harness.make_oracle(config, phase="sst", k=config.sst.replicates)
    report = run_truncate(config.space(), oracle, CalibrationTargets(config.targets))
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "truncation.json").write_text(report.to_json())
    click.echo(report.to_json())
    click.echo(f"survivors: {report.surviving.row_count} of "
               f"{report.surviving.row_count + report.eliminated_total}")


@main.command()
@config_option
@seed_option
@out_option
@click.option("--replicates", type=int, default=1, help="Number of replications.")
@click.option("--x1", type=float, default=None)
@click.option("--x2", type=float, default=None)
@click.option("--x3", type=float, default=None)
def simulate(config_path, master_seed, output_dir, replicates, x1, x2, x3):
    """Run single transmission-simulator replications and print records."""
    try:
        config = _apply_overrides(_load(config_path), master_seed=master_seed,
                                  output_dir=output_dir)
    except ConfigError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    model = config.model
    point = [model.x1 if x1 is None else x1,
             model.x2 if x2 is None else x2,
             model.x3 if x3 is None else x3]
    config = dataclasses.replace(config, model=model.with_x(point))
    seeds = [derive_seed(config.master_seed, "simulate", i) for i in range(replicates)]
    csv_text = harness.simulate_records(config, seeds)
    json_text = harness.simulate_records(config, seeds, as_json=True)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "replications.csv").write_text(csv_text)
    (out / "replications.json").write_text(json_text)
    click.echo(csv_text)


@main.command()
@seed_option
@click.option("--budget", type=int, default=200)
@click.option("--noise", type=float, default=0.05, help="Relative outcome noise.")
def bench(master_seed, budget, noise):
    """Verify the search end-to-end on built-in synthetic monotone problems."""
    from .benchmarks import brute_force_optimum, make_problem
    from .config import HCV_AXES

    seed = master_seed or 0
    space = DiscreteSpace(HCV_AXES)
    intercepts = (0.0, 0.0, 0.0)
    weights = ((40.0, 6.0, 20000.0), (30.0, 4.0, 15000.0), (0.0, 0.0, 4000.0))
    target_point = space.point((4, 2, 2))
    base = make_problem(space, intercepts, weights, targets=(1.0, 1.0, 1.0))
    targets = tuple(base.mean(target_point))
    rows = []
    for label, sd_scale in (("noiseless", 0.0), ("noisy", noise)):
        noise_sd = tuple(sd_scale * t for t in targets)
        problem = make_problem(space, intercepts, weights, targets, noise_sd=noise_sd)
        oracle = problem.oracle(k=5, master_seed=seed)
        sr = StochasticRuler(a=0.05, b=None, delta=0.15, budget=budget, random_state=seed)
        sr.fit(space, oracle)
        x_star, _, h_star = brute_force_optimum(problem)
        rows.append((label, sr.stop_reason_, sr.t_f_, sr.best_h_hat_,
                     problem.true_h(sr.best_x_), h_star))
    click.echo(f"{'problem':<12}{'stop':<12}{'t_f':>6}{'best h_hat':>14}"
               f"{'true h(best)':>14}{'true h*':>10}")
    for label, stop, t_f, best, true_best, h_star in rows:
        click.echo(f"{label:<12}{stop:<12}{t_f:>6}{best:>14.4f}{true_best:>14.4f}{h_star:>10.4f}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
def validate(config_path):
    """Validate a configuration file and list every violation."""
    with open(config_path) as fh:
        raw = yaml.safe_load(fh) or {}
    report = validate_config(raw)
    click.echo(report.format())
    sys.exit(0 if report.ok else EXIT_CONFIG_ERROR)


if __name__ == "__main__":
    main()
