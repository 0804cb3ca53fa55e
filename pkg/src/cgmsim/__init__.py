"""Posting-incentive simulation on consumer generated media networks.

Agents on a connecting-nearest-neighbour friend graph repeatedly post,
read, comment, and meta-comment; their posting strategies (rate, comment
rate, article quality) co-evolve under psychological and monetary rewards,
either with a naive single-population GA or a multiple-world GA that lets
every agent settle on its own locally dominant strategy.
"""

from ._kernels import available_backends, backend_name
from .engine import (
    AgentProfile,
    GameParams,
    Genome,
    MRStrategy,
    PerPostReward,
    RoundLog,
    WorldState,
    run_generation,
    run_round,
)
from .evolution import Ensemble, EvolutionParams, fitness_sweep, step_generation
from .experiment import (
    ConfigError,
    ExperimentConfig,
    assign_profiles,
    load_config,
    run_experiment,
    run_sweep,
)
from .network import Graph, clustering_coefficient, generate_cnn

__version__ = "0.1.0"

__all__ = [
    "AgentProfile",
    "ConfigError",
    "Ensemble",
    "EvolutionParams",
    "ExperimentConfig",
    "GameParams",
    "Genome",
    "Graph",
    "MRStrategy",
    "PerPostReward",
    "RoundLog",
    "WorldState",
    "assign_profiles",
    "available_backends",
    "backend_name",
    "clustering_coefficient",
    "fitness_sweep",
    "generate_cnn",
    "load_config",
    "run_experiment",
    "run_generation",
    "run_round",
    "run_sweep",
    "step_generation",
]
