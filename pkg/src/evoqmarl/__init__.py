"""Evolutionary optimization of variational quantum circuit agents in the Coin Game."""

from .coin_game import CoinGame, CoinGameState, EpisodeStats, episode_metrics
from .evolution import EvoConfig, Individual, next_generation
from .genomes import FixedGenome, GateGenome, LayerGenome, PrototypeGenome, random_genome
from .harness import ExperimentConfig, run_experiment
from .policy import NNGenome, RandomGenome
from .quantum import GateOp, Statevector

__version__ = "0.1.0"

__all__ = [
    "CoinGame",
    "CoinGameState",
    "EpisodeStats",
    "EvoConfig",
    "ExperimentConfig",
    "FixedGenome",
    "GateGenome",
    "GateOp",
    "Individual",
    "LayerGenome",
    "NNGenome",
    "PrototypeGenome",
    "RandomGenome",
    "Statevector",
    "episode_metrics",
    "next_generation",
    "random_genome",
    "run_experiment",
]
