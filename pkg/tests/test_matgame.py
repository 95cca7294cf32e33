"""Payoff tensors: linear/nonlinear families, trap instances, episodic wrapper."""

import itertools
from pathlib import Path

import numpy as np
import pytest

from nonzero import (
    EnumerationCapError,
    EpisodicMatGame,
    InvalidActionError,
    JointActionSpace,
    PayoffTensor,
    make_coordination_trap,
    make_linear,
    make_nonlinear,
)

FIXTURES = Path(__file__).parent / "fixtures"


class TestLinear:
    def test_examples(self):
        t = make_linear(2, 3, 0)
        assert t.reward((1, 2)) == 3.0
        assert t.reward((0, 0)) == 0.0

    def test_global_max_value(self):
        t = make_linear(4, 5, 0)
        best = max(t.reward(a) for a in t.space.iter_actions())
        assert best == 16.0
        assert t.reward((4, 4, 4, 4)) == 16.0

    def test_exact_sum_everywhere(self):
        for n, d in [(1, 4), (2, 3), (3, 2)]:
            t = make_linear(n, d, 0)
            for a in t.space.iter_actions():
                assert t.reward(a) == float(sum(a))

    def test_zero_mixed_second_difference_exhaustive(self):
        # Additive payoffs have no pairwise interaction anywhere.
        for n, d in [(2, 4), (3, 3), (4, 2), (4, 4)]:
            t = make_linear(n, d, 0)
            r = {a: t.reward(a) for a in t.space.iter_actions()}
            for a in t.space.iter_actions():
                for i, k in itertools.combinations(range(n), 2):
                    for j in range(d):
                        for l in range(d):
                            if j == a[i] or l == a[k]:
                                continue
                            au = list(a)
                            au[i] = j
                            av = list(a)
                            av[k] = l
                            auv = list(au)
                            auv[k] = l
                            mixed = (
                                r[tuple(auv)] - r[tuple(au)] - r[tuple(av)] + r[a]
                            )
                            assert mixed == 0.0

    def test_invalid_action(self):
        t = make_linear(2, 3, 0)
        with pytest.raises(InvalidActionError):
            t.reward((0, 3))


class TestNonlinear:
    def test_deterministic_repeat_queries(self):
        t = make_nonlinear(2, 3, 5)
        a = (1, 2)
        first = t.reward(a)
        assert all(t.reward(a) == first for _ in range(10_000))

    def test_seed_changes_entries(self):
        base = make_nonlinear(2, 3, 0)
        vals0 = base.values()
        for seed in range(1, 11):
            other = make_nonlinear(2, 3, seed)
            assert not np.array_equal(other.values(), vals0)

    def test_noise_mean_within_three_sigma(self):
        # Declared per-entry noise law: N(0, 4) + U(-3, 3), variance 4 + 3 = 7.
        n, d, seeds = 4, 5, 50
        devs = []
        base = make_linear(n, d, 0).values()
        for seed in range(seeds):
            t = make_nonlinear(n, d, seed)
            devs.append(t.values() - base)
        pooled = np.concatenate([dv.ravel() for dv in devs])
        sigma_mean = np.sqrt(7.0 / pooled.size)
        assert abs(pooled.mean()) < 3 * sigma_mean

    def test_noise_variance_sane(self):
        t = make_nonlinear(4, 5, 3)
        dev = t.values() - make_linear(4, 5, 0).values()
        # Variance estimate over 625 entries; 7 +- wide slack.
        assert 5.0 < dev.var() < 9.0

    def test_finite_everywhere_small(self):
        t = make_nonlinear(3, 4, 9)
        assert np.isfinite(t.values()).all()

    def test_dense_and_functional_paths_agree(self):
        dense = make_nonlinear(3, 4, 11)
        lazy = make_nonlinear(3, 4, 11, dense_cap=8)
        assert dense.is_dense and not lazy.is_dense
        for a in dense.space.iter_actions():
            assert dense.reward(a) == lazy.reward(a)

    def test_values_respects_cap(self):
        lazy = make_nonlinear(3, 4, 11, dense_cap=8)
        with pytest.raises(EnumerationCapError):
            lazy.values()

    def test_large_space_functional_evaluation(self):
        t = make_nonlinear(8, 10, 0)
        assert not t.is_dense
        assert t.space.size == 10**8
        a = (0, 1, 2, 3, 4, 5, 6, 7)
        assert np.isfinite(t.reward(a))
        assert t.reward(a) == t.reward(a)


class TestGoldenRegression:
    def test_stored_entries_match(self):
        makers = {"linear": make_linear, "nonlinear": make_nonlinear}
        tensor = None
        checked = 0
        for line in (FIXTURES / "payoff_golden.txt").read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("["):
                kind, *kv = line.strip("[]").split()
                args = dict(pair.split("=") for pair in kv)
                tensor = makers[kind](int(args["n"]), int(args["d"]), int(args["seed"]))
                continue
            idx, val = line.split(",")
            a = tensor.space.action_at(int(idx))
            assert tensor.reward(a) == float(val)
            checked += 1
        assert checked == 25


class TestPerQueryNoise:
    def test_off_by_default(self):
        t = make_nonlinear(2, 2, 0)
        rng = np.random.default_rng(0)
        assert t.reward((0, 0), rng=rng) == t.reward((0, 0))

    def test_flag_plus_rng_adds_noise(self):
        space = JointActionSpace(2, 2)
        t = PayoffTensor(space, kind="linear", per_query_noise_std=0.5)
        rng = np.random.default_rng(1)
        draws = {t.reward((1, 1), rng=rng) for _ in range(8)}
        assert len(draws) > 1
        assert t.reward((1, 1)) == 2.0


class TestConfigRoundtrip:
    @pytest.mark.parametrize(
        "tensor",
        [
            make_linear(2, 3, 4),
            make_nonlinear(3, 3, 12),
            make_coordination_trap().tensor,
            make_coordination_trap(11.0, 12.5, 1.0, board_size=6, block_corner=1).tensor,
        ],
        ids=["linear", "nonlinear", "trap-default", "trap-custom"],
    )
    def test_roundtrip_preserves_rewards(self, tensor):
        clone = PayoffTensor.from_config(tensor.to_config())
        assert clone.space == tensor.space
        for a in tensor.space.iter_actions():
            assert clone.reward(a) == tensor.reward(a)


class TestCoordinationTrap:
    def test_default_geometry(self):
        inst = make_coordination_trap()
        assert inst.trap == (0, 0)
        assert inst.escape_actions == ((2, 2), (2, 3), (3, 2), (3, 3))
        t = inst.tensor
        assert t.reward((0, 0)) == 9.0
        for esc in inst.escape_actions:
            assert t.reward(esc) == 10.0

    def test_trap_is_single_deviation_proof(self):
        inst = make_coordination_trap()
        t = inst.tensor
        # Every one-agent move from the trap lands on the floor.
        for x in range(1, 4):
            assert t.reward((x, 0)) == 0.0
            assert t.reward((0, x)) == 0.0

    def test_custom_geometry(self):
        inst = make_coordination_trap(5.0, 7.0, -1.0, board_size=8, block_corner=3)
        t = inst.tensor
        assert t.space.d == 8
        assert t.reward(inst.trap) == 5.0
        assert inst.escape_actions == ((3, 3), (3, 4), (4, 3), (4, 4))
        for esc in inst.escape_actions:
            assert t.reward(esc) == 7.0
        assert t.reward((1, 5)) == -1.0

    def test_board_size_validation(self):
        with pytest.raises(ValueError):
            make_coordination_trap(board_size=3)
        with pytest.raises(ValueError):
            make_coordination_trap(board_size=6, block_corner=5)

    def test_values_ordering(self):
        # floor < trap < escape is what makes the instance a trap.
        with pytest.raises(ValueError):
            make_coordination_trap(trap_value=10.0, escape_value=9.0)
        with pytest.raises(ValueError):
            make_coordination_trap(trap_value=1.0, escape_value=2.0, floor=1.5)


class TestEpisodic:
    def test_constant_action_geometric_return(self):
        t = make_nonlinear(2, 3, 2)
        game = EpisodicMatGame(t, horizon=7, discount=0.9)
        a = (1, 2)
        expected = t.reward(a) * (1 - 0.9**7) / (1 - 0.9)
        assert game.episode_return([a] * 7) == pytest.approx(expected, abs=1e-10)

    def test_horizon_one_equals_reward(self):
        t = make_linear(2, 2, 0)
        game = EpisodicMatGame(t, horizon=1, discount=0.5)
        assert game.episode_return([(1, 1)]) == t.reward((1, 1))

    def test_validation(self):
        t = make_linear(2, 2, 0)
        with pytest.raises(ValueError):
            EpisodicMatGame(t, horizon=0)
        with pytest.raises(ValueError):
            EpisodicMatGame(t, horizon=2, discount=1.0)
        game = EpisodicMatGame(t, horizon=2, discount=0.5)
        with pytest.raises(ValueError):
            game.episode_return([(0, 0)])
