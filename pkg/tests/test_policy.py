import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evoqmarl.coin_game import encode_observation, reset
from evoqmarl.genomes import GateGenome, random_genome
from evoqmarl.policy import (
    NNGenome,
    VQCPolicy,
    masked_argmax,
    nn_action,
    nn_param_count,
    normalize_values,
    random_action,
    vqc_action,
)
from evoqmarl.quantum import GateOp

ALL = np.ones(4, dtype=bool)


def observations(seed, count):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        s = reset(rng)
        yield encode_observation(s, s.turn)


class TestVQC:
    def test_identity_circuit_picks_first_legal(self):
        genome = GateGenome(6, [GateOp("RZ", 5, angle=0.0)])
        obs = np.zeros(36)
        obs[0] = 1.0  # embeds to |000000>, so all four expectations are +1
        assert vqc_action(genome, obs, ALL) == 0
        assert vqc_action(genome, obs, [False, False, True, True]) == 2

    def test_single_legal_action(self):
        genome = random_genome("gate", np.random.default_rng(0), gates=30)
        for obs in observations(1, 20):
            for a in range(4):
                mask = np.zeros(4, dtype=bool)
                mask[a] = True
                assert vqc_action(genome, obs, mask) == a

    def test_all_illegal(self):
        genome = random_genome("gate", np.random.default_rng(0), gates=5)
        with pytest.raises(ValueError):
            vqc_action(genome, np.ones(36), np.zeros(4, dtype=bool))

    @pytest.mark.parametrize("concept", ["fixed", "layer", "gate", "prototype"])
    def test_compiled_policy_matches_gate_path(self, concept):
        rng = np.random.default_rng(11)
        genome = random_genome(concept, rng, layers=2, gates=20)
        genome = genome.with_params(genome.params() + np.r_[np.zeros(genome.param_count() - 4), rng.normal(size=4)])
        policy = VQCPolicy(genome)
        for obs in observations(2, 30):
            mask = rng.random(4) < 0.7
            mask[rng.integers(4)] = True
            assert policy(obs, mask) == vqc_action(genome, obs, mask)

    def test_never_illegal(self):
        rng = np.random.default_rng(12)
        policy = VQCPolicy(random_genome("gate", rng, gates=40))
        for obs in observations(3, 200):
            mask = rng.random(4) < 0.5
            mask[rng.integers(4)] = True
            assert mask[policy(obs, mask)]


@settings(max_examples=60)
@given(
    values=st.lists(st.integers(-500, 500).map(lambda k: k / 100), min_size=4, max_size=4),
    mask=st.lists(st.booleans(), min_size=4, max_size=4).filter(any),
    scale=st.floats(0.1, 10),
    shift=st.floats(-5, 5),
    power=st.sampled_from([1, 3]),
)
def test_argmax_invariant_under_monotone_maps(values, mask, scale, shift, power):
    values = np.array(values)
    mask = np.array(mask)
    base = masked_argmax(normalize_values(values), mask, -1.0)
    transformed = scale * np.sign(values) * np.abs(values) ** power + shift
    assert masked_argmax(normalize_values(transformed), mask, -1.0) == base
    assert masked_argmax(values, mask, -np.inf) == base


def test_normalize_constant_vector():
    np.testing.assert_array_equal(normalize_values(np.full(4, 0.3)), 0.5)
    out = normalize_values(np.array([1.0, -1.0, 0.0, 0.5]))
    assert out.min() == 0.0 and out.max() == 1.0


class TestNN:
    @pytest.mark.parametrize("hidden, expected", [((3, 4), 147), ((64, 64), 6788)])
    def test_param_count(self, hidden, expected):
        assert nn_param_count(hidden) == expected
        assert NNGenome.random(hidden, np.random.default_rng(0)).param_count() == expected

    def test_zero_weights_pick_first_legal(self):
        g = NNGenome((3, 4), np.zeros(147))
        assert nn_action(g, np.ones(36), ALL) == 0
        assert nn_action(g, np.ones(36), [False, True, True, False]) == 1

    def test_forward_matches_manual(self):
        rng = np.random.default_rng(0)
        g = NNGenome.random((3, 4), rng)
        x = rng.normal(size=36)
        w = g.weights
        w1, b1 = w[:108].reshape(3, 36), w[108:111]
        w2, b2 = w[111:123].reshape(4, 3), w[123:127]
        w3, b3 = w[127:143].reshape(4, 4), w[143:147]
        expected = w3 @ np.tanh(w2 @ np.tanh(w1 @ x + b1) + b2) + b3
        np.testing.assert_allclose(g.forward(x), expected)

    def test_init_range(self):
        w = NNGenome.random((64, 64), np.random.default_rng(1)).weights
        assert w.min() >= -1 and w.max() < 1

    def test_wrong_size(self):
        with pytest.raises(ValueError):
            NNGenome((3, 4), np.zeros(10))


class TestRandom:
    def test_single_legal(self):
        rng = np.random.default_rng(0)
        assert all(random_action([False, False, True, False], rng) == 2 for _ in range(20))

    def test_uniform(self):
        rng = np.random.default_rng(0)
        draws = np.bincount([random_action(ALL, rng) for _ in range(100_000)], minlength=4) / 100_000
        np.testing.assert_allclose(draws, 0.25, atol=0.01)

    def test_empty_mask(self):
        with pytest.raises(ValueError):
            random_action(np.zeros(4, dtype=bool), np.random.default_rng(0))
