import itertools

import numpy as np
import pytest

from evoqmarl.coin_game import (
    BLUE,
    RED,
    CoinGame,
    CoinGameState,
    EpisodeStats,
    encode_observation,
    episode_metrics,
    legal_actions,
    reset,
    step,
)
from evoqmarl.evolution import play_episode
from evoqmarl.policy import RandomGenome

from oracles import coin_rules

CELLS = [(r, c) for r in range(3) for c in range(3)]


def all_states():
    """All 9*8*9*2 placements of two agents, a coin and its color."""
    for a0, a1 in itertools.permutations(CELLS, 2):
        for coin in CELLS:
            for color in (RED, BLUE):
                yield (a0, a1), coin, color


def test_reset_invariants_and_frequencies():
    rng = np.random.default_rng(0)
    coin_cells = np.zeros(9)
    colors = 0
    n = 100_000
    for _ in range(n):
        s = reset(rng)
        assert s.agent_pos[0] != s.agent_pos[1]
        assert s.coin_pos not in s.agent_pos
        assert (s.turn, s.step) == (0, 0)
        coin_cells[s.coin_pos[0] * 3 + s.coin_pos[1]] += 1
        colors += s.coin_color
    assert np.all(coin_cells > 0)
    # each cell is free with probability 7/9 and then chosen with probability 1/7
    np.testing.assert_allclose(coin_cells / n, 1 / 9, atol=0.005)
    assert abs(colors / n - 0.5) < 0.01


class TestLegalActions:
    def test_center(self):
        s = CoinGameState(((1, 1), (0, 0)), (2, 2), RED)
        assert legal_actions(s, 0).all()

    def test_corner(self):
        s = CoinGameState(((0, 0), (2, 2)), (1, 1), RED)
        assert list(legal_actions(s, 0)) == [False, True, False, True]

    def test_blocked_by_other_agent(self):
        s = CoinGameState(((1, 1), (1, 0)), (2, 2), RED)
        mask = legal_actions(s, 0)
        assert not mask[2]
        assert mask[0] and mask[1] and mask[3]

    def test_coin_cell_is_legal(self):
        s = CoinGameState(((1, 1), (0, 0)), (1, 2), BLUE)
        assert legal_actions(s, 0)[3]


class TestStep:
    def test_own_coin(self):
        s = CoinGameState(((1, 1), (0, 0)), (1, 2), RED)
        stats = EpisodeStats()
        new, rewards = step(s, 3, np.random.default_rng(0), stats)
        assert rewards == (1, 0)
        assert new.agent_pos[0] == (1, 2)
        assert new.coin_pos not in new.agent_pos
        assert (new.turn, new.step) == (1, 1)
        assert stats.coins == [1, 0] and stats.own_coins == [1, 0]

    def test_other_coin(self):
        s = CoinGameState(((1, 1), (0, 0)), (1, 2), BLUE)
        stats = EpisodeStats()
        _, rewards = step(s, 3, np.random.default_rng(0), stats)
        assert rewards == (1, -2)
        assert sum(rewards) == -1
        assert stats.coins == [1, 0] and stats.own_coins == [0, 0]

    def test_empty_move(self):
        s = CoinGameState(((1, 1), (0, 0)), (2, 2), BLUE)
        new, rewards = step(s, 0, np.random.default_rng(0))
        assert rewards == (0, 0)
        assert new.coin_pos == (2, 2)

    def test_illegal_raises(self):
        s = CoinGameState(((0, 0), (2, 2)), (1, 1), RED)
        with pytest.raises(ValueError):
            step(s, 0, np.random.default_rng(0))

    def test_exhaustive_against_rules_oracle(self):
        rng = np.random.default_rng(0)
        checked = 0
        for agents, coin, color in all_states():
            for turn in (0, 1):
                s = CoinGameState(agents, coin, color, turn, 0)
                mask = legal_actions(s, turn)
                for action in range(4):
                    legal, new_agents, rewards, collected = coin_rules(agents, coin, color, turn, action)
                    assert mask[action] == legal
                    if not legal:
                        continue
                    new, got = step(s, action, rng)
                    assert got == rewards
                    assert new.agent_pos == new_agents
                    if collected:
                        assert new.coin_pos not in new.agent_pos
                    else:
                        assert (new.coin_pos, new.coin_color) == (coin, color)
                    checked += 1
        assert checked > 0


class TestObservation:
    def test_three_ones(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            s = reset(rng)
            for agent in (0, 1):
                obs = encode_observation(s, agent)
                assert obs.shape == (36,)
                assert obs.sum() == 3 and set(np.unique(obs)) <= {0.0, 1.0}

    def test_egocentric_swap(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            s = reset(rng)
            a = encode_observation(s, 0).reshape(4, 9)
            b = encode_observation(s, 1).reshape(4, 9)
            np.testing.assert_array_equal(a[[1, 0, 3, 2]], b)

    def test_injective(self):
        seen = {}
        for agents, coin, color in all_states():
            key = encode_observation(CoinGameState(agents, coin, color), 0).tobytes()
            assert key not in seen
            seen[key] = (agents, coin, color)
        assert len(seen) == 9 * 8 * 9 * 2


class TestMetrics:
    def test_empty(self):
        assert tuple(episode_metrics(EpisodeStats())) == (0, 0, 0, 0.0)

    def test_example(self):
        # 8 own coins and one coin of the other color collected by agent 0
        stats = EpisodeStats(rewards=[9, -2], coins=[5, 4], own_coins=[4, 4])
        m = episode_metrics(stats)
        assert (m.score, m.total_coins, m.own_coins) == (7, 9, 8)
        assert m.own_coin_rate == pytest.approx(8 / 9)

    def test_random_episodes_conserve(self):
        for i in range(300):
            m = play_episode(RandomGenome(), 50, np.random.SeedSequence(i))
            assert m.score == 2 * m.own_coins - m.total_coins
            assert 0.0 <= m.own_coin_rate <= 1.0


def test_turns_alternate():
    env = CoinGame(np.random.default_rng(3))
    turns = []
    rng = np.random.default_rng(4)
    for _ in range(50):
        turns.append(env.turn)
        mask = env.legal_actions()
        legal = np.flatnonzero(mask)
        env.step(int(rng.choice(legal)) if legal.size else None)
        s = env.state
        assert s.agent_pos[0] != s.agent_pos[1]
    assert turns == [0, 1] * 25
    assert env.state.step == 50


def test_pass_only_without_legal_moves():
    s = CoinGameState(((0, 0), (0, 1)), (2, 2), RED)
    with pytest.raises(ValueError):
        step(s, None, np.random.default_rng(0))
