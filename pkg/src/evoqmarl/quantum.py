"""Dense statevector simulation for small variational circuits.

Qubit 0 is the most significant bit of the basis-state index, so for two
qubits the amplitude order is |00>, |01>, |10>, |11>.  Rotations follow
R(theta) = exp(-i theta G / 2) for G in {X, Y, Z}.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

ROTATIONS = ("RX", "RY", "RZ")
GATE_KINDS = ROTATIONS + ("CNOT",)

NORM_TOL = 1e-9


@dataclass(frozen=True)
class GateOp:
    kind: str
    target: int
    control: Optional[int] = None
    angle: Optional[float] = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind == "CNOT":
            if self.control is None:
                raise ValueError("CNOT needs a control qubit")
            if self.control == self.target:
                raise ValueError("CNOT control and target must differ")
        elif self.angle is None:
            raise ValueError(f"{self.kind} needs an angle")

    @property
    def parameterized(self) -> bool:
        return self.kind != "CNOT"

    def check(self, num_qubits: int) -> None:
        qubits = (self.target,) if self.control is None else (self.target, self.control)
        for q in qubits:
            if not 0 <= q < num_qubits:
                raise IndexError(f"qubit {q} out of range for {num_qubits} qubits")


@dataclass(frozen=True)
class Statevector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        size = amps.size
        if size < 2 or size & (size - 1):
            raise ValueError(f"amplitude count {size} is not a power of two >= 2")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm})")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_qubits(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    @classmethod
    def zero(cls, num_qubits: int) -> "Statevector":
        amps = np.zeros(2**num_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amps)

    @classmethod
    def basis(cls, bits: str) -> "Statevector":
        """Computational basis state from a bit string, qubit 0 first."""
        amps = np.zeros(2 ** len(bits), dtype=np.complex128)
        amps[int(bits, 2)] = 1.0
        return cls(amps)

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


def rotation_matrix(kind: str, angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if kind == "RZ":
        return np.array([[np.exp(-0.5j * angle), 0], [0, np.exp(0.5j * angle)]], dtype=np.complex128)
    raise ValueError(f"{kind} is not a rotation")


def _apply(amps: np.ndarray, gate: GateOp, n: int) -> np.ndarray:
    """Apply ``gate`` to ``amps`` of shape (2**n, *batch) and return a new array."""
    batch = amps.shape[1:]
    if gate.kind == "CNOT":
        out = amps.reshape((2,) * n + batch).copy()
        idx_c1 = [slice(None)] * n
        idx_c1[gate.control] = 1
        sub = out[tuple(idx_c1)]
        # after fixing the control axis, later axes shift down by one
        t_axis = gate.target - (1 if gate.target > gate.control else 0)
        out[tuple(idx_c1)] = np.flip(sub, axis=t_axis)
        return out.reshape(amps.shape)
    q = gate.target
    view = amps.reshape((2**q, 2, 2 ** (n - q - 1)) + batch)
    out = np.einsum("ab,ibj...->iaj...", rotation_matrix(gate.kind, gate.angle), view)
    return out.reshape(amps.shape)


def apply_gate(state: Statevector, gate: GateOp) -> Statevector:
    n = state.num_qubits
    gate.check(n)
    return Statevector(_apply(state.amplitudes, gate, n))


def apply_gates(state: Statevector, gates: Iterable[GateOp]) -> Statevector:
    n = state.num_qubits
    amps = state.amplitudes
    for gate in gates:
        gate.check(n)
        amps = _apply(amps, gate, n)
    return Statevector(amps)


def circuit_unitary(gates: Sequence[GateOp], num_qubits: int) -> np.ndarray:
    """The 2**n x 2**n unitary of a gate sequence, built column-wise."""
    u = np.eye(2**num_qubits, dtype=np.complex128)
    for gate in gates:
        gate.check(num_qubits)
        u = _apply(u, gate, num_qubits)
    return u


def amplitude_embed(features, num_qubits: int) -> Statevector:
    """Zero-pad a real feature vector to 2**n entries and normalize it into a state.

    Only the resulting amplitudes matter here, so they are written directly
    instead of being synthesized from controlled rotations.
    """
    x = np.asarray(features, dtype=np.float64).reshape(-1)
    dim = 2**num_qubits
    if x.size == 0 or x.size > dim:
        raise ValueError(f"need 0 < len(features) <= {dim}, got {x.size}")
    norm = np.linalg.norm(x)
    if norm == 0:
        raise ValueError("cannot embed an all-zero feature vector")
    padded = np.zeros(dim, dtype=np.complex128)
    padded[: x.size] = x / norm
    return Statevector(padded)


def z_expectations(amplitudes: np.ndarray, num_qubits: int, count: int) -> np.ndarray:
    """<Z> for qubits 0..count-1 of a raw amplitude array."""
    probs = (np.abs(amplitudes) ** 2).reshape((2,) * num_qubits)
    out = np.empty(count)
    for q in range(count):
        axes = tuple(a for a in range(num_qubits) if a != q)
        marginal = probs.sum(axis=axes)
        out[q] = marginal[0] - marginal[1]
    return out


def expectation_z(state: Statevector, qubit: int) -> float:
    n = state.num_qubits
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range for {n} qubits")
    probs = (np.abs(state.amplitudes) ** 2).reshape(2**qubit, 2, -1)
    return float(probs[:, 0, :].sum() - probs[:, 1, :].sum())


def run_circuit(gates: Sequence[GateOp], state: Statevector, measured_qubits: int) -> np.ndarray:
    if measured_qubits > state.num_qubits:
        raise ValueError("cannot measure more qubits than the circuit has")
    final = apply_gates(state, gates)
    return np.array([expectation_z(final, q) for q in range(measured_qubits)])
