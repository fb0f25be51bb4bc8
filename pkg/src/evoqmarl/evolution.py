"""Generational evolution of circuit (and baseline) agents via self-play.

Two families of strategies are supported:

* ``mu``, ``raremu``, ``laremu``: truncation selection of the top ``selection``
  agents, optional crossover of the flat parameter vector (random point or
  layer boundary) and Gaussian parameter mutation.  Architecture is fixed.
* ``archmu``, ``archremu``: tournament selection, optional architectural
  crossover, parameter mutation and architecture edits.

All randomness comes from streams derived from ``(seed, purpose, generation,
index)``, so a run is reproducible regardless of how evaluations are spread
over worker processes.
"""
from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .coin_game import CoinGame, EpisodeMetrics
from .genomes import (
    FixedGenome,
    GateGenome,
    LayerGenome,
    PrototypeGenome,
    _template,
    random_gate,
)
from .policy import NNGenome, RandomGenome, make_policy

STRATEGIES = ("mu", "raremu", "laremu", "archmu", "archremu")
TRUNCATION_STRATEGIES = ("mu", "raremu", "laremu")

# spawn-key tags separating the RNG streams of a run
INIT, EVAL, CHILD = 0, 1, 2


def stream(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=key)


def rng_for(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(stream(seed, *key))


def eval_stream(seed: int, generation: int, index: int, fixed: bool) -> np.random.SeedSequence:
    """Environment stream for one evaluation; shared by everyone in fixed mode."""
    if fixed:
        return stream(seed, EVAL)
    return stream(seed, EVAL, generation, index)


@dataclass
class EvoConfig:
    generations: int = 200
    population: int = 250
    steps: int = 50
    selection: int = 5
    sigma_p: float = 0.01
    sigma_a: float = 1.0
    rate: float = 1.0
    strategy: str = "mu"
    fixed_eval_seed: bool = False

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if not 1 <= self.selection <= self.population:
            raise ValueError(f"selection size {self.selection} must lie in [1, {self.population}]")
        if self.steps <= 0 or self.steps % 2:
            raise ValueError("evaluation steps must be a positive even number")
        if self.sigma_p < 0 or self.sigma_a < 0:
            raise ValueError("mutation powers must be non-negative")
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError("mutation rate must lie in [0, 1]")
        if self.generations < 1:
            raise ValueError("need at least one generation")


@dataclass
class Individual:
    genome: object
    fitness: Optional[float] = None
    metrics: Optional[EpisodeMetrics] = None

    @property
    def size_key(self) -> tuple[int, int]:
        total, _ = self.genome.gate_count()
        return total, self.genome.param_count()


# -- fitness -----------------------------------------------------------------

def play_episode(genome, steps: int, seq: np.random.SeedSequence, trace: Optional[list] = None) -> EpisodeMetrics:
    """Self-play one episode with ``genome`` driving both agents."""
    # explicit child keys: SeedSequence.spawn() is stateful and would not repeat
    env_seq, policy_seq = (
        np.random.SeedSequence(seq.entropy, spawn_key=tuple(seq.spawn_key) + (k,)) for k in (0, 1)
    )
    env = CoinGame(np.random.default_rng(env_seq))
    policy_rng = np.random.default_rng(policy_seq)
    policy = make_policy(genome)
    for _ in range(steps):
        mask = env.legal_actions()
        before = env.state
        action = policy(env.observation(), mask, policy_rng) if mask.any() else None
        rewards = env.step(action)
        if trace is not None:
            trace.append((before, action, rewards))
    return env.metrics()


def evaluate_fitness(genome, steps: int, seq: np.random.SeedSequence) -> tuple[int, EpisodeMetrics]:
    """Utilitarian fitness: both agents' undiscounted rewards summed over the episode."""
    metrics = play_episode(genome, steps, seq)
    return metrics.score, metrics


def _evaluate_job(args):
    genome, steps, seq = args
    return evaluate_fitness(genome, steps, seq)


def evaluate_population(
    population: Sequence[Individual],
    steps: int,
    seed: int,
    generation: int,
    fixed_eval_seed: bool = False,
    executor: Optional[Executor] = None,
) -> None:
    jobs = [
        (ind.genome, steps, eval_stream(seed, generation, i, fixed_eval_seed))
        for i, ind in enumerate(population)
    ]
    if executor is None:
        results = map(_evaluate_job, jobs)
    else:
        results = executor.map(_evaluate_job, jobs, chunksize=max(1, len(jobs) // 32))
    for ind, (fitness, metrics) in zip(population, results):
        ind.fitness, ind.metrics = fitness, metrics


# -- selection ---------------------------------------------------------------

def _fitnesses(population: Sequence[Individual]) -> list[float]:
    if any(ind.fitness is None for ind in population):
        raise ValueError("population has unevaluated individuals")
    return [ind.fitness for ind in population]


def truncation_select(population: Sequence[Individual], size: int) -> list[Individual]:
    """The ``size`` fittest individuals; equal fitness goes to the lower index."""
    fit = _fitnesses(population)
    order = sorted(range(len(population)), key=lambda i: (-fit[i], i))
    return [population[i] for i in order[:size]]


def tournament_select(population: Sequence[Individual], size: int, rng: np.random.Generator) -> Individual:
    fit = _fitnesses(population)
    if not 1 <= size <= len(population):
        raise ValueError(f"tournament size {size} out of range")
    entrants = rng.choice(len(population), size=size, replace=False)
    return population[min(entrants, key=lambda i: (-fit[i], i))]


def elite_index(population: Sequence[Individual]) -> int:
    """Best by fitness, then fewer gates, then fewer parameters, then lower index."""
    fit = _fitnesses(population)
    return min(range(len(population)), key=lambda i: (-fit[i], *population[i].size_key, i))


# -- parameter mutation ------------------------------------------------------

def mutate_params(genome, sigma: float, rng: np.random.Generator):
    """Add N(0, sigma^2) noise to every angle and bias; angles are not re-wrapped."""
    p = genome.params()
    return genome.with_params(p + sigma * rng.standard_normal(p.size))


def mutate_params_with_rate(genome, sigma: float, rate: float, rng: np.random.Generator):
    """Like :func:`mutate_params` but each parameter mutates with probability ``rate``."""
    p = genome.params()
    hit = rng.random(p.size) < rate
    noise = sigma * rng.standard_normal(p.size)
    return genome.with_params(np.where(hit, p + noise, p))


# -- architecture mutation ---------------------------------------------------

def edit_count(sigma_a: float, rng: np.random.Generator) -> int:
    return max(1, int(round(abs(rng.normal(0.0, sigma_a)))))


def _rotation_column(prototype: Sequence, position: int) -> int:
    return sum(g.parameterized for g in prototype[:position])


def _edit_layers(genome: LayerGenome, rng: np.random.Generator) -> LayerGenome:
    layers = genome.layers
    op = ("insert", "delete")[rng.integers(2)]
    if op == "delete" and len(layers) > 1:
        layers = np.delete(layers, rng.integers(len(layers)), axis=0)
    else:
        fresh = rng.uniform(-np.pi, np.pi, size=(1,) + layers.shape[1:])
        layers = np.insert(layers, rng.integers(len(layers) + 1), fresh, axis=0)
    return LayerGenome(layers, genome.biases)


def _edit_gates(genome: GateGenome, rng: np.random.Generator) -> GateGenome:
    gates = list(genome.gates)
    op = ("insert", "delete", "replace")[rng.integers(3)]
    if op == "delete" and len(gates) > 1:
        del gates[rng.integers(len(gates))]
    elif op == "replace":
        gates[rng.integers(len(gates))] = random_gate(rng, genome.num_qubits)
    else:
        gates.insert(rng.integers(len(gates) + 1), random_gate(rng, genome.num_qubits))
    return GateGenome(genome.num_qubits, gates, genome.biases)


def _edit_prototype(genome: PrototypeGenome, rng: np.random.Generator) -> PrototypeGenome:
    proto = list(genome.prototype)
    angles = genome.angles
    reps = genome.repetitions
    op = ("insert", "delete", "replace")[rng.integers(3)]
    if op == "delete" and len(proto) > 1:
        pos = rng.integers(len(proto))
        if proto[pos].parameterized:
            angles = np.delete(angles, _rotation_column(proto, pos), axis=1)
        del proto[pos]
        return PrototypeGenome(genome.num_qubits, proto, angles, genome.biases)
    if op == "replace":
        pos = rng.integers(len(proto))
        if proto[pos].parameterized:
            angles = np.delete(angles, _rotation_column(proto, pos), axis=1)
        del proto[pos]
    else:
        pos = rng.integers(len(proto) + 1)
    gate = _template(random_gate(rng, genome.num_qubits))
    if gate.parameterized:
        fresh = rng.uniform(-np.pi, np.pi, size=reps)
        angles = np.insert(angles, _rotation_column(proto, pos), fresh, axis=1)
    proto.insert(pos, gate)
    return PrototypeGenome(genome.num_qubits, proto, angles, genome.biases)


_EDITS: dict[type, Callable] = {
    LayerGenome: _edit_layers,
    GateGenome: _edit_gates,
    PrototypeGenome: _edit_prototype,
}


def mutate_architecture(genome, sigma_a: float, rng: np.random.Generator):
    """Apply a batch of random structural edits; the batch size grows with ``sigma_a``."""
    try:
        edit = _EDITS[type(genome)]
    except KeyError:
        raise TypeError(f"{type(genome).__name__} has no evolvable architecture") from None
    for _ in range(edit_count(sigma_a, rng)):
        genome = edit(genome, rng)
    return genome


# -- recombination -----------------------------------------------------------

def _architecture_key(genome):
    if isinstance(genome, (FixedGenome, LayerGenome)):
        return type(genome), genome._angle_vector().size, genome.num_qubits
    if isinstance(genome, NNGenome):
        return NNGenome, genome.hidden
    if isinstance(genome, GateGenome):
        return GateGenome, tuple(_template(g) for g in genome.gates)
    if isinstance(genome, PrototypeGenome):
        return PrototypeGenome, genome.prototype, genome.repetitions
    return type(genome), None


def _swap_tails(a, b, cut: int):
    pa, pb = a.params(), b.params()
    child1 = np.concatenate([pa[:cut], pb[cut:]])
    child2 = np.concatenate([pb[:cut], pa[cut:]])
    return a.with_params(child1), b.with_params(child2)


def _require_same_architecture(a, b) -> None:
    if _architecture_key(a) != _architecture_key(b):
        raise ValueError("parameter crossover needs parents with identical architecture")


def recombine_random_point(a, b, rng: np.random.Generator):
    """Single-point crossover of the flat parameter vectors (angles, then biases)."""
    _require_same_architecture(a, b)
    size = a.param_count()
    cut = int(rng.integers(1, size))
    return _swap_tails(a, b, cut)


def recombine_layerwise(a, b, rng: np.random.Generator):
    """Crossover right after the last angle of a randomly chosen layer."""
    if not isinstance(a, (FixedGenome, LayerGenome)):
        raise TypeError("layer-wise crossover needs layered genomes")
    _require_same_architecture(a, b)
    per_layer = 3 * a.num_qubits
    layers = a._angle_vector().size // per_layer
    cut = per_layer * int(rng.integers(1, layers + 1))
    return _swap_tails(a, b, cut)


def _units(genome) -> list:
    if isinstance(genome, LayerGenome):
        return list(genome.layers)
    if isinstance(genome, GateGenome):
        return list(genome.gates)
    if isinstance(genome, PrototypeGenome):
        cols = iter(genome.angles.T)
        return [(g, next(cols) if g.parameterized else None) for g in genome.prototype]
    raise TypeError(f"{type(genome).__name__} has no evolvable architecture")


def _rebuild(like, units, biases):
    if isinstance(like, LayerGenome):
        return LayerGenome(np.stack(units), biases)
    if isinstance(like, GateGenome):
        return GateGenome(like.num_qubits, units, biases)
    proto = [g for g, _ in units]
    cols = [c for g, c in units if c is not None]
    angles = np.stack(cols, axis=1) if cols else np.zeros((like.repetitions, 0))
    return PrototypeGenome(like.num_qubits, proto, angles, biases)


def recombine_architecture(a, b, rng: np.random.Generator):
    """Single-point crossover of layer, gate or prototype-gate sequences.

    The cut lies strictly inside both parents.  When a parent has a single
    unit the cut sits right after it; two single-unit parents are simply
    concatenated in both orders so no offspring is ever empty.  Each offspring
    keeps the biases of the parent supplying its front segment.
    """
    if type(a) is not type(b):
        raise ValueError("architectural crossover needs parents of the same concept")
    if isinstance(a, PrototypeGenome) and a.repetitions != b.repetitions:
        raise ValueError("prototype parents must share the repetition count")
    ua, ub = _units(a), _units(b)
    if len(ua) == 1 and len(ub) == 1:
        return _rebuild(a, ua + ub, a.biases), _rebuild(b, ub + ua, b.biases)
    shortest = min(len(ua), len(ub))
    cut = 1 if shortest == 1 else int(rng.integers(1, shortest))
    return (
        _rebuild(a, ua[:cut] + ub[cut:], a.biases),
        _rebuild(b, ub[:cut] + ua[cut:], b.biases),
    )


# -- generation step ---------------------------------------------------------

def _pick_two(parents: Sequence[Individual], rng: np.random.Generator):
    if len(parents) == 1:
        return parents[0], parents[0]
    i, j = rng.choice(len(parents), size=2, replace=False)
    return parents[i], parents[j]


def make_child(population: Sequence[Individual], parents: Sequence[Individual], config: EvoConfig, rng):
    strategy = config.strategy
    if strategy == "mu":
        parent = parents[rng.integers(len(parents))]
        return mutate_params_with_rate(parent.genome, config.sigma_p, config.rate, rng)
    if strategy in ("raremu", "laremu"):
        pa, pb = _pick_two(parents, rng)
        crossover = recombine_random_point if strategy == "raremu" else recombine_layerwise
        child, _ = crossover(pa.genome, pb.genome, rng)
        return mutate_params_with_rate(child, config.sigma_p, config.rate, rng)
    if strategy == "archmu":
        parent = tournament_select(population, config.selection, rng)
        child = mutate_params(parent.genome, config.sigma_p, rng)
        return mutate_architecture(child, config.sigma_a, rng)
    pa = tournament_select(population, config.selection, rng)
    pb = tournament_select(population, config.selection, rng)
    child, _ = recombine_architecture(pa.genome, pb.genome, rng)
    child = mutate_params_with_rate(child, config.sigma_p, config.rate, rng)
    if rng.random() < config.rate:
        child = mutate_architecture(child, config.sigma_a, rng)
    return child


def next_generation(population: Sequence[Individual], config: EvoConfig, seed: int, generation: int) -> list[Individual]:
    """Children of an evaluated population followed by its unaltered elite."""
    elite = population[elite_index(population)]
    if isinstance(elite.genome, RandomGenome):
        return [Individual(RandomGenome()) for _ in population]
    parents = truncation_select(population, config.selection) if config.strategy in TRUNCATION_STRATEGIES else []
    children = [
        Individual(make_child(population, parents, config, rng_for(seed, CHILD, generation, i)))
        for i in range(len(population) - 1)
    ]
    children.append(Individual(elite.genome))
    return children
