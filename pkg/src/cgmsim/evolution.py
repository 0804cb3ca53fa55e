"""Strategy co-evolution: naive GA baseline and the multiple-world GA.

The multiple-world GA (MWGA) runs W copies of the same network with the same
agent profiles but independently evolving genomes.  Parents for the child at
(world, agent) are drawn by fitness roulette from that agent's slot *across
worlds*, so better strategies spread to the same network location in many
worlds and every agent can settle on its own locally dominant strategy.  The
naive GA baseline is the single-world degenerate case with population-wide
parent selection, which is what drives its near-uniform outcomes.

Fitness of a genome is the agent's utility accumulated over the four rounds
of one generation.  Selection is roulette over min-shifted fitness (utilities
can be negative), crossover is uniform per bit by default, and mutation flips
each of the nine genome bits independently.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._kernels import _purepy
from .engine import (
    GENERATION_ROUNDS,
    AgentProfile,
    GameParams,
    Genome,
    MRStrategy,
    WorldState,
    bits_to_values,
    run_generation,
)
from .network import Graph

SELECTION_MODES = ("cross_world", "population")
CROSSOVER_OPERATORS = ("uniform", "one_point")


@dataclass
class EvolutionParams:
    worlds: int = 10
    generations: int = 1000
    mutation_rate: float = 0.01
    selection: str = "cross_world"
    crossover: str = "uniform"
    elitism: bool = False

    def __post_init__(self):
        if self.worlds < 1:
            raise ValueError("worlds must be >= 1")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if self.selection not in SELECTION_MODES:
            raise ValueError(f"selection must be one of {SELECTION_MODES}")
        if self.crossover not in CROSSOVER_OPERATORS:
            raise ValueError(f"crossover must be one of {CROSSOVER_OPERATORS}")
        if self.selection == "population" and self.worlds != 1:
            raise ValueError("population-wide selection requires worlds == 1")


@dataclass
class Ensemble:
    """W worlds sharing one graph and one profile vector.

    ``genomes`` is the packed uint16 genome matrix of shape (W, n).  Each
    world owns a private RNG stream and scratch state, so worlds can be
    evaluated concurrently without changing any result.
    """

    graph: Graph
    profiles: list[AgentProfile]
    genomes: np.ndarray
    world_rngs: list[np.random.Generator]
    m: np.ndarray = field(init=False, repr=False)
    states: list[WorldState] = field(init=False, repr=False)

    def __post_init__(self):
        n = self.graph.node_count
        if len(self.profiles) != n:
            raise ValueError("one profile per node required")
        if self.genomes.ndim != 2 or self.genomes.shape[1] != n:
            raise ValueError("genomes must have shape (worlds, nodes)")
        if len(self.world_rngs) != self.genomes.shape[0]:
            raise ValueError("one RNG stream per world required")
        self.m = np.array([p.m for p in self.profiles])
        self.states = [WorldState(n) for _ in range(self.worlds)]

    @property
    def worlds(self) -> int:
        return self.genomes.shape[0]


@dataclass(frozen=True)
class GenerationStats:
    """Pooled per-group strategy statistics of one evaluated generation."""

    alpha_b_mean: float
    alpha_b_std: float
    alpha_l_mean: float
    alpha_l_std: float
    alpha_q_mean: float
    alpha_q_std: float
    beta_b_mean: float
    beta_b_std: float
    beta_l_mean: float
    beta_l_std: float
    beta_q_mean: float
    beta_q_std: float
    utility_mean: float
    posts_per_round: float


def fitness_sweep(ensemble: Ensemble, params: GameParams, mr: MRStrategy,
                  threads: int = 1,
                  read_reward_recipient: str = "reader") -> np.ndarray:
    """Evaluate every world for one generation; returns fitness (W, n).

    Worlds run on private RNG streams and states, so the thread count never
    changes the result.
    """
    W = ensemble.worlds
    fitness = np.empty((W, ensemble.graph.node_count))

    def one(w: int) -> None:
        fitness[w] = run_generation(
            ensemble.graph, ensemble.genomes[w], ensemble.m, params, mr,
            ensemble.world_rngs[w], state=ensemble.states[w],
            read_reward_recipient=read_reward_recipient)

    if threads > 1 and W > 1:
        with ThreadPoolExecutor(max_workers=min(threads, W)) as pool:
            list(pool.map(one, range(W)))
    else:
        for w in range(W):
            one(w)
    return fitness


def _check_finite(fitness) -> None:
    arr = np.asarray(fitness, dtype=float)
    if not np.isfinite(arr).all():
        raise ValueError("fitness values must be finite")


def select_parents_mwga(fitness_column, rng: np.random.Generator) -> tuple[int, int]:
    """Two world indices by roulette over one agent's cross-world fitness.

    Draws are independent, so the parents may coincide; W = 1 degenerates
    to (0, 0).
    """
    _check_finite(fitness_column)
    cum = _purepy.roulette_cumulative(list(fitness_column))
    return _purepy.pick(cum, rng.random()), _purepy.pick(cum, rng.random())


def select_parents_ga(fitness_vector, rng: np.random.Generator) -> tuple[int, int]:
    """Two agent indices by roulette over the whole population's fitness."""
    _check_finite(fitness_vector)
    cum = _purepy.roulette_cumulative(list(fitness_vector))
    return _purepy.pick(cum, rng.random()), _purepy.pick(cum, rng.random())


def crossover(parent_a: Genome, parent_b: Genome, rng: np.random.Generator,
              method: str = "uniform") -> Genome:
    """Mix two genomes bitwise; uniform picks each bit from either parent."""
    if method not in CROSSOVER_OPERATORS:
        raise ValueError(f"method must be one of {CROSSOVER_OPERATORS}")
    child = _purepy.cross_bits(parent_a.to_bits(), parent_b.to_bits(),
                               method == "one_point", rng.random)
    return Genome.from_bits(child)


def mutate(genome: Genome, m: float, rng: np.random.Generator) -> Genome:
    """Flip each of the nine genome bits independently with probability m."""
    if not 0.0 <= m <= 1.0:
        raise ValueError("mutation probability must lie in [0, 1]")
    return Genome.from_bits(_purepy.mutate_bits(genome.to_bits(), m, rng.random))


def _generation_stats(ensemble: Ensemble, fitness: np.ndarray) -> GenerationStats:
    b, l, q = bits_to_values(ensemble.genomes)
    alpha = ensemble.m < 0.5
    beta = ~alpha
    out = []
    for mask in (alpha, beta):
        for values in (b, l, q):
            pooled = values[:, mask]
            out.append(float(np.mean(pooled)))
            out.append(float(np.std(pooled)))
    total_posts = sum(int(st.posts_made.sum()) for st in ensemble.states)
    posts_per_round = total_posts / (GENERATION_ROUNDS * ensemble.worlds)
    return GenerationStats(*out, float(np.mean(fitness)), posts_per_round)


def step_generation(ensemble: Ensemble, evo: EvolutionParams,
                    params: GameParams, mr: MRStrategy,
                    evo_rng: np.random.Generator, threads: int = 1,
                    read_reward_recipient: str = "reader",
                    ) -> tuple[GenerationStats, np.ndarray]:
    """Evaluate the current generation, then replace it synchronously.

    Returns the evaluated generation's stats and fitness matrix; the
    ensemble's genomes are swapped for the children.  The evolution stream
    is consumed in fixed (world, agent) order, independent of ``threads``.
    """
    fitness = fitness_sweep(ensemble, params, mr, threads=threads,
                            read_reward_recipient=read_reward_recipient)
    if not np.isfinite(fitness).all():
        raise ValueError("fitness values must be finite")
    stats = _generation_stats(ensemble, fitness)

    impl = _kernels.active()
    children = impl.evolve_generation(
        ensemble.genomes, fitness,
        evo.selection == "population",
        evo.mutation_rate, evo.crossover == "one_point", evo_rng)
    if evo.elitism:
        # Keep each world's best individual untouched (ties: lowest id).
        for w in range(ensemble.worlds):
            best = int(np.argmax(fitness[w]))
            children[w, best] = ensemble.genomes[w, best]
    ensemble.genomes = children
    return stats, fitness
