"""Circuit genomes: the four VQC representations and their lowering to gates.

Every genome exposes a flat parameter vector (``params``, angles first in
lowering order, then the four action biases) and rebuilds itself from one
(``with_params``).  Genomes are frozen; operators always return new ones.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .quantum import GATE_KINDS, GateOp

NUM_ACTIONS = 4
DEFAULT_QUBITS = 6


def _frozen(a, dtype=np.float64) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.flags.writeable = False
    return arr


def _uniform_angles(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.uniform(-np.pi, np.pi, size=shape)


def random_gate(rng: np.random.Generator, num_qubits: int) -> GateOp:
    """One gate drawn uniformly from {RX, RY, RZ, CNOT} on a uniform qubit."""
    kind = GATE_KINDS[rng.integers(len(GATE_KINDS))]
    target = int(rng.integers(num_qubits))
    if kind == "CNOT":
        control = int(rng.integers(num_qubits - 1))
        if control >= target:
            control += 1
        return GateOp("CNOT", target, control=control)
    return GateOp(kind, target, angle=float(rng.uniform(-np.pi, np.pi)))


def _template(gate: GateOp) -> GateOp:
    """Strip the angle from a gate, keeping kind and placement."""
    if gate.kind == "CNOT":
        return gate
    return GateOp(gate.kind, gate.target, angle=0.0)


class _ParamMixin:
    biases: np.ndarray

    def _angle_vector(self) -> np.ndarray:
        raise NotImplementedError

    def _with_angles(self, angles: np.ndarray, biases: np.ndarray):
        raise NotImplementedError

    def params(self) -> np.ndarray:
        return np.concatenate([self._angle_vector(), self.biases])

    def with_params(self, flat) -> "Genome":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.param_count(),):
            raise ValueError(f"expected {self.param_count()} parameters, got {flat.shape}")
        return self._with_angles(flat[:-NUM_ACTIONS], flat[-NUM_ACTIONS:])

    def param_count(self) -> int:
        return self._angle_vector().size + NUM_ACTIONS

    def gate_count(self) -> tuple[int, int]:
        gates = self.lower()
        return len(gates), sum(g.parameterized for g in gates)


def _cnot_ring(n: int, offset: int) -> list[GateOp]:
    return [GateOp("CNOT", (i + offset) % n, control=i) for i in range(n)]


@dataclass(frozen=True, eq=False)
class FixedGenome(_ParamMixin):
    """Static layered circuit: CNOT ring, then RZ-RY-RZ on every qubit, per layer."""

    thetas: np.ndarray  # (layers, qubits, 3)
    biases: np.ndarray = field(default_factory=lambda: np.zeros(NUM_ACTIONS))
    concept = "fixed"

    def __post_init__(self):
        thetas = _frozen(self.thetas)
        if thetas.ndim != 3 or thetas.shape[2] != 3 or thetas.shape[0] < 1 or thetas.shape[1] < 2:
            raise ValueError(f"thetas must have shape (layers>=1, qubits>=2, 3), got {thetas.shape}")
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "biases", _frozen(self.biases))

    @property
    def num_qubits(self) -> int:
        return self.thetas.shape[1]

    @property
    def num_layers(self) -> int:
        return self.thetas.shape[0]

    def lower(self) -> list[GateOp]:
        n = self.num_qubits
        gates: list[GateOp] = []
        for l, layer in enumerate(self.thetas):
            # offset cycles through 1..n-1 so control never equals target
            gates += _cnot_ring(n, (l % (n - 1)) + 1)
            for q, (a, b, c) in enumerate(layer):
                gates += [GateOp("RZ", q, angle=a), GateOp("RY", q, angle=b), GateOp("RZ", q, angle=c)]
        return gates

    def _angle_vector(self):
        return self.thetas.reshape(-1)

    def _with_angles(self, angles, biases):
        return FixedGenome(angles.reshape(self.thetas.shape), biases)


@dataclass(frozen=True, eq=False)
class LayerGenome(_ParamMixin):
    """Strongly entangling layers; the layer count evolves."""

    layers: np.ndarray  # (layers, qubits, 3) angles for RX, RY, RZ
    biases: np.ndarray = field(default_factory=lambda: np.zeros(NUM_ACTIONS))
    concept = "layer"

    def __post_init__(self):
        layers = _frozen(self.layers)
        if layers.ndim != 3 or layers.shape[2] != 3 or layers.shape[1] < 2:
            raise ValueError(f"layers must have shape (layers, qubits>=2, 3), got {layers.shape}")
        if layers.shape[0] < 1:
            raise ValueError("a layer genome needs at least one layer")
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "biases", _frozen(self.biases))

    @property
    def num_qubits(self) -> int:
        return self.layers.shape[1]

    @property
    def num_layers(self) -> int:
        return self.layers.shape[0]

    def lower(self) -> list[GateOp]:
        n = self.num_qubits
        gates: list[GateOp] = []
        for layer in self.layers:
            gates += _cnot_ring(n, -1)
            for q, (a, b, c) in enumerate(layer):
                gates += [GateOp("RX", q, angle=a), GateOp("RY", q, angle=b), GateOp("RZ", q, angle=c)]
        return gates

    def _angle_vector(self):
        return self.layers.reshape(-1)

    def _with_angles(self, angles, biases):
        return LayerGenome(angles.reshape(self.layers.shape), biases)


@dataclass(frozen=True, eq=False)
class GateGenome(_ParamMixin):
    """Free gate list without layer structure."""

    num_qubits: int
    gates: tuple
    biases: np.ndarray = field(default_factory=lambda: np.zeros(NUM_ACTIONS))
    concept = "gate"

    def __post_init__(self):
        gates = tuple(self.gates)
        if not gates:
            raise ValueError("a gate genome needs at least one gate")
        for g in gates:
            g.check(self.num_qubits)
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "biases", _frozen(self.biases))

    def lower(self) -> list[GateOp]:
        return list(self.gates)

    def _angle_vector(self):
        return np.array([g.angle for g in self.gates if g.parameterized], dtype=np.float64)

    def _with_angles(self, angles, biases):
        it = iter(angles)
        gates = [GateOp(g.kind, g.target, angle=float(next(it))) if g.parameterized else g for g in self.gates]
        return GateGenome(self.num_qubits, gates, biases)


@dataclass(frozen=True, eq=False)
class PrototypeGenome(_ParamMixin):
    """A gate template repeated ``repetitions`` times with per-instance angles.

    ``angles[r, j]`` is the angle of the j-th rotation of the prototype in
    repetition r; lowering walks repetitions in order.
    """

    num_qubits: int
    prototype: tuple
    angles: np.ndarray  # (repetitions, rotations in prototype)
    biases: np.ndarray = field(default_factory=lambda: np.zeros(NUM_ACTIONS))
    concept = "prototype"

    def __post_init__(self):
        proto = tuple(_template(g) for g in self.prototype)
        if not proto:
            raise ValueError("a prototype needs at least one gate")
        for g in proto:
            g.check(self.num_qubits)
        angles = _frozen(self.angles)
        n_rot = sum(g.parameterized for g in proto)
        if angles.ndim != 2 or angles.shape[0] < 1 or angles.shape[1] != n_rot:
            raise ValueError(f"angles must have shape (repetitions>=1, {n_rot}), got {angles.shape}")
        object.__setattr__(self, "prototype", proto)
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "biases", _frozen(self.biases))

    @property
    def repetitions(self) -> int:
        return self.angles.shape[0]

    def lower(self) -> list[GateOp]:
        gates: list[GateOp] = []
        for row in self.angles:
            it = iter(row)
            gates += [GateOp(g.kind, g.target, angle=float(next(it))) if g.parameterized else g for g in self.prototype]
        return gates

    def _angle_vector(self):
        return self.angles.reshape(-1)

    def _with_angles(self, angles, biases):
        return PrototypeGenome(self.num_qubits, self.prototype, angles.reshape(self.angles.shape), biases)


CircuitGenome = Union[FixedGenome, LayerGenome, GateGenome, PrototypeGenome]
Genome = CircuitGenome


def random_genome(
    concept: str,
    rng: np.random.Generator,
    num_qubits: int = DEFAULT_QUBITS,
    layers: Optional[int] = None,
    gates: Optional[int] = None,
) -> CircuitGenome:
    """Draw a fresh circuit genome.

    ``layers`` is the layer count for fixed/layer circuits and the repetition
    count for prototypes; ``gates`` is the gate count for gate circuits and the
    prototype length.  Biases start at zero.
    """
    if num_qubits < 2:
        raise ValueError("need at least two qubits")
    if concept in ("fixed", "layer"):
        if not layers or layers < 1:
            raise ValueError(f"{concept} circuits need layers >= 1")
        angles = _uniform_angles(rng, (layers, num_qubits, 3))
        return FixedGenome(angles) if concept == "fixed" else LayerGenome(angles)
    if concept == "gate":
        if not gates or gates < 1:
            raise ValueError("gate circuits need gates >= 1")
        return GateGenome(num_qubits, [random_gate(rng, num_qubits) for _ in range(gates)])
    if concept == "prototype":
        if not gates or gates < 1 or not layers or layers < 1:
            raise ValueError("prototype circuits need gates >= 1 and layers >= 1")
        proto = [_template(random_gate(rng, num_qubits)) for _ in range(gates)]
        n_rot = sum(g.parameterized for g in proto)
        return PrototypeGenome(num_qubits, proto, _uniform_angles(rng, (layers, n_rot)))
    raise ValueError(f"unknown circuit concept {concept!r}")


# -- serialization -----------------------------------------------------------

def _gate_record(g: GateOp, with_angle: bool = True) -> dict:
    rec = {"kind": g.kind, "target": g.target}
    if g.kind == "CNOT":
        rec["control"] = g.control
    elif with_angle:
        rec["angle"] = g.angle
    return rec


def _gate_from_record(rec: dict) -> GateOp:
    if rec["kind"] == "CNOT":
        return GateOp("CNOT", int(rec["target"]), control=int(rec["control"]))
    return GateOp(rec["kind"], int(rec["target"]), angle=float(rec.get("angle", 0.0)))


def genome_to_dict(genome) -> dict:
    from .policy import NNGenome, RandomGenome

    if isinstance(genome, RandomGenome):
        return {"concept": "random"}
    if isinstance(genome, NNGenome):
        return {"concept": "nn", "hidden": list(genome.hidden), "weights": genome.weights.tolist()}
    doc = {"concept": genome.concept, "num_qubits": genome.num_qubits}
    if isinstance(genome, (FixedGenome, LayerGenome)):
        doc["layers"] = genome._angle_vector().reshape(-1, genome.num_qubits, 3).tolist()
    elif isinstance(genome, GateGenome):
        doc["gates"] = [_gate_record(g) for g in genome.gates]
    else:
        doc["repetitions"] = genome.repetitions
        doc["prototype"] = [_gate_record(g, with_angle=False) for g in genome.prototype]
        doc["angles"] = genome.angles.tolist()
    doc["biases"] = genome.biases.tolist()
    return doc


def genome_from_dict(doc: dict):
    from .policy import NNGenome, RandomGenome

    concept = doc["concept"]
    if concept == "random":
        return RandomGenome()
    if concept == "nn":
        return NNGenome(tuple(doc["hidden"]), np.array(doc["weights"], dtype=np.float64))
    n = int(doc["num_qubits"])
    biases = np.array(doc["biases"], dtype=np.float64)
    if concept in ("fixed", "layer"):
        layers = np.array(doc["layers"], dtype=np.float64).reshape(-1, n, 3)
        return FixedGenome(layers, biases) if concept == "fixed" else LayerGenome(layers, biases)
    if concept == "gate":
        return GateGenome(n, [_gate_from_record(r) for r in doc["gates"]], biases)
    if concept == "prototype":
        proto = [_gate_from_record(r) for r in doc["prototype"]]
        n_rot = sum(g.parameterized for g in proto)
        angles = np.array(doc["angles"], dtype=np.float64).reshape(int(doc["repetitions"]), n_rot)
        return PrototypeGenome(n, proto, angles, biases)
    raise ValueError(f"unknown concept {concept!r} in genome document")


def dumps(genome) -> str:
    return json.dumps(genome_to_dict(genome))


def loads(text: str):
    return genome_from_dict(json.loads(text))


def genomes_equal(a, b) -> bool:
    """Bit-exact structural equality of two genomes."""
    return type(a) is type(b) and genome_to_dict(a) == genome_to_dict(b)
