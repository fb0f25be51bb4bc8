"""Action selection for circuit, neural-network and random agents."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coin_game import NUM_ACTIONS, OBS_SIZE
from .quantum import amplitude_embed, circuit_unitary, run_circuit, z_expectations

EMBED_QUBITS = 6
MASKED_VALUE = -1.0


def _check_mask(mask) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("no legal action available")
    return mask


def masked_argmax(values: np.ndarray, mask: np.ndarray, fill: float) -> int:
    """Argmax over legal entries; ties go to the lowest index."""
    return int(np.argmax(np.where(mask, values, fill)))


def normalize_values(values: np.ndarray) -> np.ndarray:
    """Min-max scale to [0, 1]; a constant vector maps to 0.5 everywhere."""
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.full_like(values, 0.5, dtype=np.float64)
    return (values - lo) / (hi - lo)


def vqc_action(genome, observation, mask) -> int:
    mask = _check_mask(mask)
    state = amplitude_embed(observation, EMBED_QUBITS)
    values = run_circuit(genome.lower(), state, NUM_ACTIONS) + genome.biases
    return masked_argmax(normalize_values(values), mask, MASKED_VALUE)


class VQCPolicy:
    """A circuit genome compiled once to its unitary for repeated evaluation.

    Produces the same actions as :func:`vqc_action` up to float rounding in
    the last bits of the expectations.
    """

    def __init__(self, genome):
        self.genome = genome
        self.num_qubits = genome.num_qubits
        if self.num_qubits != EMBED_QUBITS:
            raise ValueError(f"observations need {EMBED_QUBITS} qubits, genome has {self.num_qubits}")
        self.unitary = circuit_unitary(genome.lower(), self.num_qubits)
        self.biases = np.asarray(genome.biases)

    def values(self, observation) -> np.ndarray:
        psi = amplitude_embed(observation, self.num_qubits).amplitudes
        return z_expectations(self.unitary @ psi, self.num_qubits, NUM_ACTIONS) + self.biases

    def __call__(self, observation, mask, rng=None) -> int:
        mask = _check_mask(mask)
        return masked_argmax(normalize_values(self.values(observation)), mask, MASKED_VALUE)


@dataclass(frozen=True, eq=False)
class NNGenome:
    """Two-hidden-layer tanh network stored as one flat weight vector.

    Layout per affine layer: weight matrix (out x in, row-major), then bias.
    """

    hidden: tuple
    weights: np.ndarray
    concept = "nn"

    def __post_init__(self):
        hidden = tuple(int(h) for h in self.hidden)
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        if w.size != nn_param_count(hidden):
            raise ValueError(f"expected {nn_param_count(hidden)} weights for hidden={hidden}, got {w.size}")
        w.flags.writeable = False
        object.__setattr__(self, "hidden", hidden)
        object.__setattr__(self, "weights", w)

    @property
    def sizes(self) -> tuple:
        return (OBS_SIZE, *self.hidden, NUM_ACTIONS)

    @classmethod
    def random(cls, hidden, rng: np.random.Generator) -> "NNGenome":
        return cls(tuple(hidden), rng.uniform(-1.0, 1.0, size=nn_param_count(hidden)))

    def layers(self):
        pos = 0
        sizes = self.sizes
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            w = self.weights[pos : pos + fan_in * fan_out].reshape(fan_out, fan_in)
            pos += fan_in * fan_out
            b = self.weights[pos : pos + fan_out]
            pos += fan_out
            yield w, b

    def forward(self, observation) -> np.ndarray:
        x = np.asarray(observation, dtype=np.float64)
        layers = list(self.layers())
        for w, b in layers[:-1]:
            x = np.tanh(w @ x + b)
        w, b = layers[-1]
        return w @ x + b

    def params(self) -> np.ndarray:
        return self.weights.copy()

    def with_params(self, flat) -> "NNGenome":
        return NNGenome(self.hidden, flat)

    def param_count(self) -> int:
        return self.weights.size

    def gate_count(self) -> tuple[int, int]:
        return 0, 0


def nn_param_count(hidden) -> int:
    sizes = (OBS_SIZE, *hidden, NUM_ACTIONS)
    return sum(i * o + o for i, o in zip(sizes[:-1], sizes[1:]))


def nn_action(genome: NNGenome, observation, mask) -> int:
    mask = _check_mask(mask)
    return masked_argmax(genome.forward(observation), mask, -np.inf)


def random_action(mask, rng: np.random.Generator) -> int:
    legal = np.flatnonzero(_check_mask(mask))
    return int(legal[rng.integers(legal.size)])


@dataclass(frozen=True)
class RandomGenome:
    """Placeholder genome for agents that act uniformly at random."""

    concept = "random"

    def params(self) -> np.ndarray:
        return np.zeros(0)

    def with_params(self, flat) -> "RandomGenome":
        return self

    def param_count(self) -> int:
        return 0

    def gate_count(self) -> tuple[int, int]:
        return 0, 0


def make_policy(genome):
    """Callable ``policy(observation, mask, rng) -> action`` for any genome."""
    if isinstance(genome, RandomGenome):
        return lambda obs, mask, rng: random_action(mask, rng)
    if isinstance(genome, NNGenome):
        return lambda obs, mask, rng: nn_action(genome, obs, mask)
    return VQCPolicy(genome)
