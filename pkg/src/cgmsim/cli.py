"""Command-line front end.

Flag values override config-file values, which override the built-in
defaults.  Exit codes: 0 success, 2 usage error, 3 config validation error,
4 I/O error.  Every subcommand prints the resolved seed triple to stderr so
a run can be reproduced from captured logs.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import _kernels
from .experiment import (
    ConfigError,
    analyze_run,
    compare_dispersion,
    load_config,
    run_experiment,
    run_sweep,
)
from .network import generate_cnn, write_edge_list

_CONFIG_FLAGS = (
    ("--n", "n", int),
    ("--u", "u", float),
    ("--c-ref", "c_ref", float),
    ("--mu", "mu", float),
    ("--delta", "delta", float),
    ("--pi", "pi", float),
    ("--worlds", "worlds", int),
    ("--generations", "generations", int),
    ("--mutation-rate", "mutation_rate", float),
    ("--optimizer", "optimizer", str),
    ("--read-reward-recipient", "read_reward_recipient", str),
    ("--crossover", "crossover", str),
    ("--snapshot-every", "snapshot_every", int),
    ("--seed-graph", "seed_graph", int),
    ("--seed-profiles", "seed_profiles", int),
    ("--seed-sim", "seed_sim", int),
)


def _config_options(fn):
    fn = click.option("--config", "config_path", default=None,
                      help="TOML config file; flags override its values.")(fn)
    for flag, name, kind in _CONFIG_FLAGS:
        fn = click.option(flag, name, type=kind, default=None)(fn)
    fn = click.option("--elitism/--no-elitism", "elitism", default=None)(fn)
    fn = click.option("--out", "output_dir", default=None,
                      help="Output directory (default: out).")(fn)
    return fn


def _build_config(config_path, **flags):
    overrides = {key: value for key, value in flags.items() if value is not None}
    return load_config(config_path, overrides)


def _echo_seeds(cfg):
    click.echo(f"seeds: graph={cfg.seed_graph} profiles={cfg.seed_profiles} "
               f"sim={cfg.seed_sim}", err=True)


@click.group()
def cli():
    """Simulate posting incentives on a CGM friend network."""


@cli.command(name="gen-net")
@click.option("--n", type=int, default=None)
@click.option("--u", type=float, default=None)
@click.option("--seed-graph", "seed_graph", type=int, default=None)
@click.option("--config", "config_path", default=None)
@click.option("--out", "out_path", default="network.edges",
              help="Edge-list file to write.")
def gen_net(config_path, out_path, **flags):
    """Generate a friend network and dump it as an edge list."""
    cfg = _build_config(config_path, **flags)
    _echo_seeds(cfg)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed_graph)))
    graph = generate_cnn(cfg.n, cfg.u, rng)
    write_edge_list(graph, out_path, u=cfg.u, seed=cfg.seed_graph)
    click.echo(f"wrote {out_path}: {graph.node_count} nodes, {graph.edge_count} edges")


@cli.command(name="run")
@_config_options
@click.option("--threads", type=int, default=1,
              help="Max worlds evaluated concurrently; never changes results.")
def run_cmd(config_path, threads, **flags):
    """Run one experiment and write its datasets."""
    cfg = _build_config(config_path, **flags)
    _echo_seeds(cfg)
    click.echo(f"kernel backend: {_kernels.backend_name()}", err=True)
    result = run_experiment(cfg, threads=threads)
    s = result.summary
    click.echo(f"wrote {result.output_dir} (optimizer={cfg.optimizer}, "
               f"final mean Q={s['overall']['q_mean']:.4f}, "
               f"posts/round={s['posts_per_round']:.2f})")


@cli.command(name="sweep")
@_config_options
@click.option("--pi-values", "pi_values", required=True,
              help="Comma-separated monetary reward grid, e.g. 0,1,2.")
@click.option("--seeds", "seeds_per_cell", type=int, default=5,
              help="Paired simulation seeds per pi value.")
@click.option("--threads", type=int, default=1)
def sweep_cmd(config_path, pi_values, seeds_per_cell, threads, **flags):
    """Sweep the monetary reward over paired seeds."""
    cfg = _build_config(config_path, **flags)
    _echo_seeds(cfg)
    try:
        pis = [float(tok) for tok in pi_values.split(",") if tok.strip()]
    except ValueError:
        raise click.UsageError(f"--pi-values: cannot parse {pi_values!r}")
    result = run_sweep(cfg, pis, seeds_per_cell, threads=threads)
    click.echo(f"wrote {cfg.output_dir}/sweep.csv "
               f"({len(result.cells)} cells)")
    for pi in result.pi_values:
        agg = result.per_pi[pi]
        click.echo(f"  pi={pi:g}: median mean Q={agg['overall']['q_mean']:.4f}, "
                   f"posts/round={agg['posts_per_round']:.2f}")


@cli.command(name="analyze")
@click.argument("run_dirs", nargs=-1, required=True)
def analyze_cmd(run_dirs):
    """Recompute summary statistics from run directories and verify them
    against each run's manifest."""
    reports = [analyze_run(d) for d in run_dirs]
    out = {"runs": reports}
    comparison = compare_dispersion(reports)
    if comparison is not None:
        out["dispersion"] = comparison
    click.echo(json.dumps(out, indent=2, sort_keys=True))
    bad = [rep["path"] for rep in reports if not rep["matches_manifest"]]
    if bad:
        raise click.ClickException(f"summary mismatch against manifest in: {', '.join(bad)}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.UsageError as e:
        click.echo(f"error: {e.format_message()}", err=True)
        return 2
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except ConfigError as e:
        click.echo(f"config error: {e}", err=True)
        return 3
    except OSError as e:
        click.echo(f"io error: {e}", err=True)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
