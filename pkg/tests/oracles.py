"""Independent reference implementations used only by the tests."""
from math import comb

import numpy as np
from scipy.linalg import expm

PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def kron_all(ops):
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def dense_gate(kind, target, n, control=None, angle=None):
    """Full 2**n matrix of a gate, qubit 0 = leftmost Kronecker factor."""
    if kind == "CNOT":
        idle = [I2] * n
        idle[control] = P0
        flip = [I2] * n
        flip[control] = P1
        flip[target] = PAULI["X"]
        return kron_all(idle) + kron_all(flip)
    ops = [I2] * n
    ops[target] = expm(-0.5j * angle * PAULI[kind[1]])
    return kron_all(ops)


def dense_circuit(gates, n):
    u = np.eye(2**n, dtype=complex)
    for g in gates:
        u = dense_gate(g.kind, g.target, n, g.control, g.angle) @ u
    return u


def tournament_win_probability(rank, population, size):
    """Chance that the individual of the given fitness rank (0 = best) wins a
    tournament of ``size`` distinct entrants drawn from ``population``."""
    return comb(population - 1 - rank, size - 1) / comb(population, size)


MOVES = {0: (-1, 0), 1: (1, 0), 2: (0, -1), 3: (0, 1)}


def coin_rules(agents, coin, color, turn, action):
    """Brute-force Coin Game rules: returns (legal, new_agents, rewards, collected)."""
    me, other = agents[turn], agents[1 - turn]
    dr, dc = MOVES[action]
    dest = (me[0] + dr, me[1] + dc)
    if not (0 <= dest[0] <= 2 and 0 <= dest[1] <= 2) or dest == other:
        return False, agents, (0, 0), False
    new_agents = (dest, other) if turn == 0 else (other, dest)
    rewards = [0, 0]
    collected = dest == coin
    if collected:
        rewards[turn] = 1
        if color != turn:
            rewards[1 - turn] = -2
    return True, new_agents, tuple(rewards), collected
