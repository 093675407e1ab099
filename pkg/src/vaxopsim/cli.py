"""Command line interface: run, sweep, trace, oracle."""

from __future__ import annotations

import json
import subprocess
import sys
import time
from dataclasses import replace

import click
import numpy as np

from . import __version__
from .config import config_from_dict, config_to_dict, load_config
from .errors import ConfigurationError
from .harness import RNG_DESCRIPTOR, run_experiment, run_trace, write_csv

FULL_SCALE = (500, 500)


def _git_commit() -> str | None:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            capture_output=True,
            text=True,
            timeout=5,
        )
    except OSError:
        return None
    return out.stdout.strip() if out.returncode == 0 else None


def _write_sidecar(config, path, elapsed, threads):
    meta = {
        "config": config_to_dict(config),
        "master_seed": config.master_seed,
        "rng": RNG_DESCRIPTOR,
        "vaxopsim_version": __version__,
        "wall_clock_seconds": elapsed,
        "threads": threads,
        "commit": _git_commit(),
    }
    with open(str(path) + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=2)


def _apply_overrides(config, seed, out, full_scale):
    if seed is not None:
        config = replace(config, master_seed=seed)
    if out is not None:
        config = replace(config, out=out)
    if full_scale:
        config = replace(
            config, num_networks=FULL_SCALE[0], sir_runs_per_network=FULL_SCALE[1]
        )
    if config.out is None:
        raise ConfigurationError("no output path: set out in the config or pass --out")
    return config


def _execute(config, threads, meta, quiet=False):
    started = time.time()

    def progress(done, total):
        if not quiet and (done % 50 == 0 or done == total):
            click.echo(f"\r{done}/{total} replicates", nl=(done == total), err=True)

    results = run_experiment(config, threads=threads, progress=progress)
    write_csv(config, results, config.out)
    elapsed = time.time() - started
    if meta:
        _write_sidecar(config, config.out, elapsed, threads)
    if not quiet:
        click.echo(f"wrote {config.out} ({len(results)} grid points, {elapsed:.1f}s)", err=True)


@click.group()
@click.version_option(__version__)
def main():
    """Vaccine-opinion diffusion and SIR epidemic simulator."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None, help="Override master_seed.")
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Override output CSV path.")
@click.option("--full-scale", is_flag=True, help="Run the full 500x500 replication.")
@click.option("--meta/--no-meta", default=True, help="Write the JSON metadata sidecar.")
@click.option("--quiet", is_flag=True)
def run(config_path, seed, threads, out, full_scale, meta, quiet):
    """Execute the experiment described by a TOML config file."""
    try:
        config = _apply_overrides(load_config(config_path), seed, out, full_scale)
    except ConfigurationError as exc:
        raise click.ClickException(str(exc))
    _execute(config, threads, meta, quiet)


def _parse_axis(text, cast):
    return [cast(v) for v in text.split(",")] if text else None


@main.command()
@click.option("--strategy", default="none", show_default=True)
@click.option("--n", type=int, default=5000, show_default=True)
@click.option("--mean-degree", "-k", type=int, default=10, show_default=True)
@click.option("--rewire-prob", "-p", type=float, default=0.01, show_default=True)
@click.option("--theta", type=int, default=2, show_default=True)
@click.option("--tau", default="inf", show_default=True, help="Steps, or inf for absorption.")
@click.option("--mu-neg", type=float, default=0.001, show_default=True)
@click.option("--mu-pos", type=float, default=0.0, show_default=True)
@click.option("--omega", type=float, default=0.006, show_default=True, help="Social rate (both signs).")
@click.option("--t-size", type=int, default=None, help="Target set size T.")
@click.option("--t-r", type=int, default=None, help="Dynamic update interval.")
@click.option("--zeta", type=int, default=None)
@click.option("--z-target", type=int, default=None)
@click.option("--beta", type=float, default=0.1, show_default=True)
@click.option("--gamma", type=float, default=0.1, show_default=True)
@click.option("--i0", type=int, default=1, show_default=True)
@click.option("--networks", type=int, default=50, show_default=True)
@click.option("--sir-runs", type=int, default=100, show_default=True)
@click.option("--sweep-omega", default=None, help="Comma-separated omega grid.")
@click.option("--sweep-mu-pos", default=None, help="Comma-separated mu_pos grid.")
@click.option("--sweep-t-r", default=None, help="Comma-separated t_r grid.")
@click.option("--sweep-zeta", default=None, help="Comma-separated zeta grid.")
@click.option("--sweep-z-target", default=None, help="Comma-separated Z grid.")
@click.option("--sweep-t-size", default=None, help="Comma-separated T grid.")
@click.option("--seed", type=int, required=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--full-scale", is_flag=True)
@click.option("--meta/--no-meta", default=True)
@click.option("--quiet", is_flag=True)
def sweep(
    strategy, n, mean_degree, rewire_prob, theta, tau, mu_neg, mu_pos, omega,
    t_size, t_r, zeta, z_target, beta, gamma, i0, networks, sir_runs,
    sweep_omega, sweep_mu_pos, sweep_t_r, sweep_zeta, sweep_z_target,
    sweep_t_size, seed, threads, out, full_scale, meta, quiet,
):
    """Run a sweep assembled from shorthand flags instead of a config file."""
    campaign = {"strategy": strategy, "mu_pos": mu_pos}
    if t_size is not None:
        campaign["target_size"] = t_size
    if t_r is not None:
        campaign["update_interval"] = t_r
    if zeta is not None:
        campaign["zeta"] = zeta
    if z_target is not None:
        campaign["z_target"] = z_target
    axes = {
        "omega": _parse_axis(sweep_omega, float),
        "mu_pos": _parse_axis(sweep_mu_pos, float),
        "t_r": _parse_axis(sweep_t_r, int),
        "zeta": _parse_axis(sweep_zeta, int),
        "z_target": _parse_axis(sweep_z_target, int),
        "target_size": _parse_axis(sweep_t_size, int),
    }
    raw = {
        "master_seed": seed,
        "out": out,
        "network": {"n": n, "mean_degree": mean_degree, "rewire_prob": rewire_prob},
        "opinion": {
            "mu_neg": mu_neg,
            "omega_neg": omega,
            "omega_pos": omega,
            "theta": theta,
            "tau": int(tau) if tau != "inf" else "inf",
        },
        "campaign": campaign,
        "epidemic": {"beta": beta, "gamma": gamma, "initial_infected": i0},
        "replication": {"num_networks": networks, "sir_runs_per_network": sir_runs},
        "sweep": {k: v for k, v in axes.items() if v is not None},
    }
    try:
        config = _apply_overrides(config_from_dict(raw), None, None, full_scale)
    except ConfigurationError as exc:
        raise click.ClickException(str(exc))
    _execute(config, threads, meta, quiet)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--network-index", type=int, default=0, show_default=True)
@click.option("--point-index", type=int, default=0, show_default=True,
              help="Grid point to trace when the config sweeps.")
@click.option("--seed", type=int, default=None, help="Override master_seed.")
@click.option("--out", type=click.Path(), required=True)
@click.option("--dump-graph", type=click.Path(), default=None,
              help="Also dump the replicate's network as an edge list.")
def trace(config_path, network_index, point_index, seed, out, dump_graph):
    """Run a single opinion replicate and export its per-step counts."""
    try:
        config = load_config(config_path)
        if seed is not None:
            config = replace(config, master_seed=seed)
    except ConfigurationError as exc:
        raise click.ClickException(str(exc))
    trace_result = run_trace(config, network_index, point_index)
    trace_result.to_csv(out)
    if dump_graph:
        from .harness import _cached_network

        graph, _ = _cached_network(config, network_index, False)
        graph.to_edgelist(dump_graph)
    click.echo(f"wrote {out} ({trace_result.steps_run} steps)", err=True)


@main.command()
@click.argument("suite", type=click.Choice(["betweenness", "sir", "selection", "all"]),
                default="all")
@click.option("--seed", type=int, default=20240817, show_default=True)
@click.option("--graphs", type=int, default=20, show_default=True,
              help="Number of random graphs for the betweenness check.")
@click.option("--sir-runs", type=int, default=20000, show_default=True)
@click.option("--cases", type=int, default=10, show_default=True,
              help="Number of randomized selection scenarios.")
def oracle(suite, seed, graphs, sir_runs, cases):
    """Cross-check the fast implementations against brute-force oracles."""
    from . import oracle_checks

    failures = 0
    if suite in ("betweenness", "all"):
        failures += oracle_checks.check_betweenness(seed, graphs, click.echo)
    if suite in ("sir", "all"):
        failures += oracle_checks.check_sir(seed, sir_runs, click.echo)
    if suite in ("selection", "all"):
        failures += oracle_checks.check_selection(seed, cases, click.echo)
    if failures:
        raise click.ClickException(f"{failures} oracle check(s) failed")
    click.echo("all oracle checks passed")


if __name__ == "__main__":
    main()
