"""Turn-based 3x3 Coin Game in cooperative reward mode.

Agent 0 is red, agent 1 is blue; a coin's color is the index of the agent it
belongs to.  Agents alternate turns.  Collecting a coin gives the collector
+1; if the coin belonged to the other agent, that agent gets -2.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

GRID = 3
NUM_CELLS = GRID * GRID
NUM_ACTIONS = 4
OBS_SIZE = 4 * NUM_CELLS

RED, BLUE = 0, 1
COLOR_NAMES = ("red", "blue")

# north, south, west, east as (d_row, d_col)
MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))
ACTION_NAMES = ("north", "south", "west", "east")

Cell = tuple[int, int]


@dataclass(frozen=True)
class CoinGameState:
    agent_pos: tuple[Cell, Cell]
    coin_pos: Cell
    coin_color: int
    turn: int = 0
    step: int = 0


@dataclass
class EpisodeStats:
    rewards: list[int] = field(default_factory=lambda: [0, 0])
    coins: list[int] = field(default_factory=lambda: [0, 0])
    own_coins: list[int] = field(default_factory=lambda: [0, 0])


class EpisodeMetrics(NamedTuple):
    score: int
    total_coins: int
    own_coins: int
    own_coin_rate: float


def _cell(index: int) -> Cell:
    return divmod(int(index), GRID)


def _spawn_coin(rng: np.random.Generator, agents) -> tuple[Cell, int]:
    free = [c for c in range(NUM_CELLS) if _cell(c) not in agents]
    pos = _cell(free[rng.integers(len(free))])
    return pos, int(rng.integers(2))


def reset(rng: np.random.Generator) -> CoinGameState:
    a0, a1 = rng.choice(NUM_CELLS, size=2, replace=False)
    agents = (_cell(a0), _cell(a1))
    coin, color = _spawn_coin(rng, agents)
    return CoinGameState(agents, coin, color)


def legal_actions(state: CoinGameState, agent: int) -> np.ndarray:
    """Boolean mask over (north, south, west, east)."""
    r, c = state.agent_pos[agent]
    other = state.agent_pos[1 - agent]
    mask = np.zeros(NUM_ACTIONS, dtype=bool)
    for a, (dr, dc) in enumerate(MOVES):
        dest = (r + dr, c + dc)
        mask[a] = 0 <= dest[0] < GRID and 0 <= dest[1] < GRID and dest != other
    return mask


def step(
    state: CoinGameState,
    action: int,
    rng: np.random.Generator,
    stats: EpisodeStats | None = None,
) -> tuple[CoinGameState, tuple[int, int]]:
    """Advance one turn.  ``action=None`` passes (only valid with no legal move)."""
    agent = state.turn
    mask = legal_actions(state, agent)
    if action is None:
        if mask.any():
            raise ValueError("cannot pass while a legal move exists")
        return replace(state, turn=1 - agent, step=state.step + 1), (0, 0)
    if not mask[action]:
        raise ValueError(f"action {action} is illegal for agent {agent} in {state}")

    dr, dc = MOVES[action]
    r, c = state.agent_pos[agent]
    dest = (r + dr, c + dc)
    positions = list(state.agent_pos)
    positions[agent] = dest
    positions = tuple(positions)

    rewards = [0, 0]
    coin, color = state.coin_pos, state.coin_color
    if dest == coin:
        rewards[agent] += 1
        own = color == agent
        if not own:
            rewards[1 - agent] -= 2
        if stats is not None:
            stats.coins[agent] += 1
            stats.own_coins[agent] += int(own)
        coin, color = _spawn_coin(rng, positions)
    if stats is not None:
        stats.rewards[0] += rewards[0]
        stats.rewards[1] += rewards[1]
    new = CoinGameState(positions, coin, color, 1 - agent, state.step + 1)
    return new, (rewards[0], rewards[1])


def encode_observation(state: CoinGameState, agent: int) -> np.ndarray:
    """Egocentric one-hot planes: self, other agent, own-color coin, other-color coin."""
    obs = np.zeros((4, GRID, GRID))
    obs[0][state.agent_pos[agent]] = 1.0
    obs[1][state.agent_pos[1 - agent]] = 1.0
    obs[2 if state.coin_color == agent else 3][state.coin_pos] = 1.0
    return obs.reshape(-1)


def episode_metrics(stats: EpisodeStats) -> EpisodeMetrics:
    total = sum(stats.coins)
    own = sum(stats.own_coins)
    return EpisodeMetrics(sum(stats.rewards), total, own, own / total if total else 0.0)


class CoinGame:
    """Stateful wrapper owning one episode's state, statistics and RNG."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.state = reset(rng)
        self.stats = EpisodeStats()

    @property
    def turn(self) -> int:
        return self.state.turn

    def observation(self) -> np.ndarray:
        return encode_observation(self.state, self.state.turn)

    def legal_actions(self) -> np.ndarray:
        return legal_actions(self.state, self.state.turn)

    def step(self, action) -> tuple[int, int]:
        self.state, rewards = step(self.state, action, self.rng, self.stats)
        return rewards

    def metrics(self) -> EpisodeMetrics:
        return episode_metrics(self.stats)
