"""Experiment orchestration: configuration, seeding, runs, sweeps, outputs.

A run is a pure function of its configuration, including the three seeds
(graph, profiles, simulation).  The simulation seed is split into one
genome-initialization stream, one evolution stream, and one private game
stream per world, so results are bit-identical regardless of how many
worker threads evaluate worlds.

Outputs per run directory:

* ``scatter_alpha.csv`` / ``scatter_beta.csv`` — one row per (world, agent)
  with columns id, degree, B, L, Q, M, group, world; the axes of the
  strategy/degree scatter plots.
* ``scatter_mean.csv``  — per-agent strategy means across worlds (world
  column says ``mean``).
* ``timeseries.csv``    — per-snapshot generation statistics.
* ``manifest.json``     — the resolved config plus summary statistics.

Sweeps add ``sweep.csv`` with one row per (pi, seed) cell; cells share the
graph and profile seeds so differences are attributable to pi alone.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from .engine import (
    AgentProfile,
    GameParams,
    N_LEVELS,
    PerPostReward,
    levels_to_bits,
    bits_to_values,
)
from .evolution import Ensemble, EvolutionParams, step_generation
from .network import clustering_coefficient, generate_cnn

SCATTER_COLUMNS = ("id", "degree", "B", "L", "Q", "M", "group", "world")
SWEEP_COLUMNS = ("pi", "seed", "mean_Q", "std_Q", "mean_B", "mean_L",
                 "posts_per_round", "spearman_degree_Q")
TIMESERIES_COLUMNS = (
    "generation",
    "alpha_b_mean", "alpha_b_std", "alpha_l_mean", "alpha_l_std",
    "alpha_q_mean", "alpha_q_std",
    "beta_b_mean", "beta_b_std", "beta_l_mean", "beta_l_std",
    "beta_q_mean", "beta_q_std",
    "utility_mean", "posts_per_round",
)


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


_INT_FIELDS = ("n", "worlds", "generations", "snapshot_every",
               "seed_graph", "seed_profiles", "seed_sim")
_FLOAT_FIELDS = ("u", "c_ref", "mu", "delta", "pi", "mutation_rate")
_STR_FIELDS = ("optimizer", "read_reward_recipient", "crossover", "output_dir")
_BOOL_FIELDS = ("elitism",)


@dataclass
class ExperimentConfig:
    """Everything a run depends on.  Defaults are the reference experiment:
    400 agents split 200/200 by monetary preference, c_ref=1, mu=8,
    delta=0.5, pi=1, 10 worlds, 1000 generations, mutation 0.01, u=0.9."""

    n: int = 400
    u: float = 0.9
    c_ref: float = 1.0
    mu: float = 8.0
    delta: float = 0.5
    pi: float = 1.0
    worlds: int = 10
    generations: int = 1000
    mutation_rate: float = 0.01
    optimizer: str = "mwga"
    read_reward_recipient: str = "reader"
    crossover: str = "uniform"
    elitism: bool = False
    seed_graph: int = 1
    seed_profiles: int = 2
    seed_sim: int = 3
    output_dir: str = "out"
    snapshot_every: int = 10

    def validate(self) -> "ExperimentConfig":
        self.optimizer = str(self.optimizer).lower()
        self.read_reward_recipient = str(self.read_reward_recipient).lower()
        self.crossover = str(self.crossover).lower()

        def fail(name, why):
            raise ConfigError(f"config field '{name}': {why}")

        if self.n < 2:
            fail("n", "must be >= 2")
        if self.n % 2:
            fail("n", "must be even to split the groups equally")
        if not 0.0 <= self.u < 1.0:
            fail("u", "must lie in [0, 1)")
        for name in ("c_ref", "mu", "delta"):
            if not getattr(self, name) > 0.0:
                fail(name, "must be > 0")
        if not self.pi >= 0.0:
            fail("pi", "must be >= 0")
        if self.worlds < 1:
            fail("worlds", "must be >= 1")
        if self.generations < 1:
            fail("generations", "must be >= 1")
        if not 0.0 <= self.mutation_rate <= 1.0:
            fail("mutation_rate", "must lie in [0, 1]")
        if self.optimizer not in ("ga", "mwga"):
            fail("optimizer", "must be 'ga' or 'mwga'")
        if self.optimizer == "ga" and self.worlds != 1:
            fail("worlds", "the naive GA baseline requires worlds = 1")
        if self.read_reward_recipient not in ("reader", "author"):
            fail("read_reward_recipient", "must be 'reader' or 'author'")
        if self.crossover not in ("uniform", "one_point"):
            fail("crossover", "must be 'uniform' or 'one_point'")
        for name in ("seed_graph", "seed_profiles", "seed_sim"):
            if getattr(self, name) < 0:
                fail(name, "must be a nonnegative integer")
        if self.snapshot_every < 1:
            fail("snapshot_every", "must be >= 1")
        return self

    def game_params(self) -> GameParams:
        return GameParams(self.c_ref, self.mu, self.delta, self.pi)

    def evolution_params(self) -> EvolutionParams:
        return EvolutionParams(
            worlds=self.worlds, generations=self.generations,
            mutation_rate=self.mutation_rate,
            selection="population" if self.optimizer == "ga" else "cross_world",
            crossover=self.crossover, elitism=self.elitism)


def _coerce(key: str, value):
    if key in _INT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"config field '{key}': expected an integer, got {value!r}")
        return value
    if key in _FLOAT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config field '{key}': expected a number, got {value!r}")
        return float(value)
    if key in _STR_FIELDS:
        if not isinstance(value, str):
            raise ConfigError(f"config field '{key}': expected a string, got {value!r}")
        return value
    if key in _BOOL_FIELDS:
        if not isinstance(value, bool):
            raise ConfigError(f"config field '{key}': expected a boolean, got {value!r}")
        return value
    raise ConfigError(f"unknown config key '{key}'")


def load_config(source=None, overrides: dict | None = None) -> ExperimentConfig:
    """Build a validated config from a TOML key-value document plus overrides.

    ``source`` may be a file path or inline TOML text (anything containing
    '=' or a newline is treated as text); an empty document yields the
    defaults.  ``overrides`` (e.g. command-line flags) win over the file.
    """
    data: dict = {}
    if source is not None:
        if isinstance(source, Path):
            text = source.read_text(encoding="utf-8")
        elif "=" in source or "\n" in source:
            text = source
        else:
            text = Path(source).read_text(encoding="utf-8")
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"config document is not valid TOML: {e}")
    merged = {key: _coerce(key, value) for key, value in data.items()}
    for key, value in (overrides or {}).items():
        merged[key] = _coerce(key, value)
    return ExperimentConfig(**merged).validate()


def assign_profiles(n: int, rng: np.random.Generator) -> list[AgentProfile]:
    """Split agents 50/50 into the psychological-reward group (m in [0, 0.5))
    and the monetary group (m in [0.5, 1)); which ids land in which half is
    a seeded uniform permutation."""
    if n % 2:
        raise ValueError("n must be even for the equal group split")
    perm = rng.permutation(n)
    m = np.empty(n)
    half = n // 2
    m[perm[:half]] = 0.5 * rng.random(half)
    m[perm[half:]] = 0.5 + 0.5 * rng.random(half)
    return [AgentProfile(i, float(m[i])) for i in range(n)]


@dataclass(frozen=True)
class AgentRecord:
    """Final strategy and accounting of one agent in one world."""

    id: int
    world: int
    degree: int
    group: str
    m: float
    b: float
    l: float
    q: float
    utility: float
    posts_made: int
    reads_made: int
    comments_made: int
    comments_received: int
    meta_comments_made: int
    meta_comments_received: int


@dataclass(frozen=True)
class MeanAgentRecord:
    """Per-agent strategy averaged across worlds at the final generation."""

    id: int
    degree: int
    group: str
    m: float
    b: float
    l: float
    q: float
    utility: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[AgentRecord]
    mean_records: list[MeanAgentRecord]
    timeseries: list[tuple]
    summary: dict
    output_dir: Path


def _rngs_for(config: ExperimentConfig):
    graph_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed_graph)))
    profile_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed_profiles)))
    spawned = np.random.SeedSequence(config.seed_sim).spawn(config.worlds + 2)
    init_rng = np.random.Generator(np.random.PCG64(spawned[0]))
    evo_rng = np.random.Generator(np.random.PCG64(spawned[1]))
    world_rngs = [np.random.Generator(np.random.PCG64(s)) for s in spawned[2:]]
    return graph_rng, profile_rng, init_rng, evo_rng, world_rngs


def _initial_genomes(worlds: int, n: int, rng: np.random.Generator) -> np.ndarray:
    levels = rng.integers(0, N_LEVELS, size=(worlds, n, 3))
    return levels_to_bits(levels[:, :, 0], levels[:, :, 1], levels[:, :, 2])


def _spearman(x: np.ndarray, y: np.ndarray):
    if len(x) < 2 or np.all(x == x[0]) or np.all(y == y[0]):
        return None
    rho = float(spearmanr(x, y).statistic)
    return None if np.isnan(rho) else rho


def _stats_block(rows) -> dict:
    out = {}
    for key, col in (("b", 2), ("l", 3), ("q", 4)):
        values = np.array([r[col] for r in rows])
        out[f"{key}_mean"] = float(np.mean(values))
        out[f"{key}_std"] = float(np.std(values))
    return out


def summary_from_rows(alpha_rows, beta_rows, mean_rows) -> dict:
    """Scatter-derived summary; ``analyze`` recomputes exactly this block."""
    summary = {
        "alpha": _stats_block(alpha_rows),
        "beta": _stats_block(beta_rows),
        "overall": _stats_block(list(alpha_rows) + list(beta_rows)),
    }
    degrees = np.array([r[1] for r in mean_rows], dtype=float)
    mean_q = np.array([r[4] for r in mean_rows])
    summary["q_std_overall"] = float(np.std(mean_q))
    summary["spearman_degree_q"] = _spearman(degrees, mean_q)
    return summary


def _scatter_rows(records: list[AgentRecord]):
    alpha, beta = [], []
    for r in records:
        row = (r.id, r.degree, r.b, r.l, r.q, r.m, r.group, r.world)
        (alpha if r.group == "alpha" else beta).append(row)
    return alpha, beta


def _mean_rows(mean_records: list[MeanAgentRecord]):
    return [(r.id, r.degree, r.b, r.l, r.q, r.m, r.group, "mean")
            for r in mean_records]


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def export_scatter(records: list[AgentRecord],
                   mean_records: list[MeanAgentRecord],
                   out_dir) -> dict[str, Path]:
    """Write the per-group scatter datasets plus the cross-world mean file."""
    if not records:
        raise ValueError("no records to export")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    alpha, beta = _scatter_rows(records)
    paths = {}
    for name, rows in (("scatter_alpha.csv", alpha), ("scatter_beta.csv", beta),
                       ("scatter_mean.csv", _mean_rows(mean_records))):
        path = out_dir / name
        _write_csv(path, SCATTER_COLUMNS, rows)
        paths[name] = path
    return paths


def _timeseries_row(generation: int, stats) -> tuple:
    return (generation,
            stats.alpha_b_mean, stats.alpha_b_std,
            stats.alpha_l_mean, stats.alpha_l_std,
            stats.alpha_q_mean, stats.alpha_q_std,
            stats.beta_b_mean, stats.beta_b_std,
            stats.beta_l_mean, stats.beta_l_std,
            stats.beta_q_mean, stats.beta_q_std,
            stats.utility_mean, stats.posts_per_round)


def run_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Build the world, evolve it, write all outputs, return the records.

    Byte-identical outputs are guaranteed for identical configs, whatever
    ``threads`` is.
    """
    config.validate()
    graph_rng, profile_rng, init_rng, evo_rng, world_rngs = _rngs_for(config)
    graph = generate_cnn(config.n, config.u, graph_rng)
    profiles = assign_profiles(config.n, profile_rng)
    genomes = _initial_genomes(config.worlds, config.n, init_rng)
    ensemble = Ensemble(graph, profiles, genomes, world_rngs)
    params = config.game_params()
    evo = config.evolution_params()
    mr = PerPostReward()

    lifetime = {name: np.zeros((config.worlds, config.n), dtype=np.int64)
                for name in ensemble.states[0].COUNTER_NAMES}
    timeseries = []
    evaluated = ensemble.genomes
    stats = fitness = None
    for t in range(1, config.generations + 1):
        evaluated = ensemble.genomes.copy()
        stats, fitness = step_generation(
            ensemble, evo, params, mr, evo_rng, threads=threads,
            read_reward_recipient=config.read_reward_recipient)
        for w, state in enumerate(ensemble.states):
            for name, totals in lifetime.items():
                totals[w] += getattr(state, name)
        if t % config.snapshot_every == 0 or t == config.generations:
            timeseries.append(_timeseries_row(t, stats))

    records, mean_records = _final_records(config, graph, profiles, evaluated,
                                           fitness, lifetime)
    alpha_rows, beta_rows = _scatter_rows(records)
    summary = summary_from_rows(alpha_rows, beta_rows, _mean_rows(mean_records))
    summary["utility_mean"] = stats.utility_mean
    summary["posts_per_round"] = stats.posts_per_round
    summary["k_mean"] = float(np.mean(np.stack([st.K for st in ensemble.states])))

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    export_scatter(records, mean_records, out_dir)
    _write_csv(out_dir / "timeseries.csv", TIMESERIES_COLUMNS, timeseries)
    degrees = graph.degrees()
    manifest = {
        "config": dataclasses.asdict(config),
        "graph": {
            "edge_count": graph.edge_count,
            "clustering_coefficient": clustering_coefficient(graph),
            "max_degree": int(degrees.max()),
        },
        "summary": summary,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return ExperimentResult(config, records, mean_records, timeseries,
                            summary, out_dir)


def _final_records(config, graph, profiles, genomes, fitness, lifetime):
    b, l, q = bits_to_values(genomes)
    degrees = graph.degrees()
    records = []
    for w in range(config.worlds):
        for i in range(config.n):
            records.append(AgentRecord(
                id=i, world=w, degree=int(degrees[i]),
                group=profiles[i].group, m=profiles[i].m,
                b=float(b[w, i]), l=float(l[w, i]), q=float(q[w, i]),
                utility=float(fitness[w, i]),
                posts_made=int(lifetime["posts_made"][w, i]),
                reads_made=int(lifetime["reads_made"][w, i]),
                comments_made=int(lifetime["comments_made"][w, i]),
                comments_received=int(lifetime["comments_received"][w, i]),
                meta_comments_made=int(lifetime["meta_comments_made"][w, i]),
                meta_comments_received=int(lifetime["meta_comments_received"][w, i]),
            ))
    mean_records = [
        MeanAgentRecord(
            id=i, degree=int(degrees[i]), group=profiles[i].group,
            m=profiles[i].m,
            b=float(np.mean(b[:, i])), l=float(np.mean(l[:, i])),
            q=float(np.mean(q[:, i])), utility=float(np.mean(fitness[:, i])),
        )
        for i in range(config.n)
    ]
    return records, mean_records


# --- sweeps ---


@dataclass
class SweepResult:
    """Per-cell metrics plus per-pi aggregates (medians across seeds)."""

    pi_values: tuple[float, ...]
    seeds_per_cell: int
    cells: list[dict]
    per_pi: dict[float, dict] = field(repr=False)


def run_sweep(config: ExperimentConfig, pi_values, seeds_per_cell: int,
              threads: int = 1) -> SweepResult:
    """Run the pi grid with paired seeds and aggregate the results.

    Graph and profile seeds are shared by every cell; the simulation seed
    varies only with the seed index, so cells with equal seed index are
    paired across pi values.
    """
    pis = sorted(float(p) for p in pi_values)
    if not pis:
        raise ConfigError("pi_values must not be empty")
    if any(p < 0 for p in pis):
        raise ConfigError("pi_values must all be >= 0")
    if len(set(pis)) != len(pis):
        raise ConfigError("pi_values must be distinct")
    if seeds_per_cell < 1:
        raise ConfigError("seeds_per_cell must be >= 1")
    config.validate()

    base = Path(config.output_dir)
    cells = []
    summaries: dict[float, list[dict]] = {p: [] for p in pis}
    for pi in pis:
        for s in range(seeds_per_cell):
            sim_seed = config.seed_sim + s
            cell_cfg = dataclasses.replace(
                config, pi=pi, seed_sim=sim_seed,
                output_dir=str(base / f"pi_{pi:g}_seed_{sim_seed}"))
            result = run_experiment(cell_cfg, threads=threads)
            summary = result.summary
            summaries[pi].append(summary)
            cells.append({
                "pi": pi,
                "seed": sim_seed,
                "mean_Q": summary["overall"]["q_mean"],
                "std_Q": summary["overall"]["q_std"],
                "mean_B": summary["overall"]["b_mean"],
                "mean_L": summary["overall"]["l_mean"],
                "posts_per_round": summary["posts_per_round"],
                "spearman_degree_Q": summary["spearman_degree_q"],
            })

    base.mkdir(parents=True, exist_ok=True)
    rows = [[("" if cell[c] is None else cell[c]) for c in SWEEP_COLUMNS]
            for cell in cells]
    _write_csv(base / "sweep.csv", SWEEP_COLUMNS, rows)

    per_pi = {}
    for pi in pis:
        group = summaries[pi]
        agg = {}
        for block in ("overall", "alpha", "beta"):
            agg[block] = {
                key: float(np.median([s[block][key] for s in group]))
                for key in group[0][block]
            }
        agg["posts_per_round"] = float(np.median([s["posts_per_round"] for s in group]))
        rhos = [s["spearman_degree_q"] for s in group if s["spearman_degree_q"] is not None]
        agg["spearman_degree_q"] = float(np.median(rhos)) if rhos else None
        per_pi[pi] = agg
    return SweepResult(tuple(pis), seeds_per_cell, cells, per_pi)


# --- analysis of existing run directories ---


def _read_scatter(path: Path):
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != SCATTER_COLUMNS:
            raise ValueError(f"{path}: unexpected scatter header {header}")
        for rec in reader:
            world = int(rec[7]) if rec[7] != "mean" else "mean"
            rows.append((int(rec[0]), int(rec[1]), float(rec[2]), float(rec[3]),
                         float(rec[4]), float(rec[5]), rec[6], world))
    return rows


def analyze_run(run_dir) -> dict:
    """Recompute the scatter-derived summary of a finished run and check it
    against the run's manifest.  Works purely from the output files."""
    run_dir = Path(run_dir)
    with open(run_dir / "manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    alpha_rows = _read_scatter(run_dir / "scatter_alpha.csv")
    beta_rows = _read_scatter(run_dir / "scatter_beta.csv")
    mean_rows = _read_scatter(run_dir / "scatter_mean.csv")
    recomputed = summary_from_rows(alpha_rows, beta_rows, mean_rows)

    mismatches = []
    stored = manifest["summary"]
    for key, value in recomputed.items():
        if stored.get(key) != value:
            mismatches.append(key)

    with open(run_dir / "timeseries.csv", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        last = None
        for last in reader:
            pass
    if last is not None:
        final = dict(zip(header, last))
        for key in ("utility_mean", "posts_per_round"):
            if float(final[key]) != stored.get(key):
                mismatches.append(f"timeseries:{key}")

    return {
        "path": str(run_dir),
        "optimizer": manifest["config"]["optimizer"],
        "summary": recomputed,
        "stored_summary": stored,
        "matches_manifest": not mismatches,
        "mismatches": mismatches,
    }


def compare_dispersion(reports: list[dict]) -> dict | None:
    """Contrast strategy dispersion (std of per-agent mean quality) between
    GA and MWGA run directories, when both kinds are present."""
    by_opt: dict[str, list[float]] = {}
    for rep in reports:
        by_opt.setdefault(rep["optimizer"], []).append(rep["summary"]["q_std_overall"])
    if not ("ga" in by_opt and "mwga" in by_opt):
        return None
    ga = float(np.median(by_opt["ga"]))
    mwga = float(np.median(by_opt["mwga"]))
    return {
        "ga_q_std_median": ga,
        "mwga_q_std_median": mwga,
        "mwga_more_diverse": mwga > ga,
    }
