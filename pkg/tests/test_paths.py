"""Walk combinatorics: trajectories, traversal counts, pairs, braid words."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anyonwalk.errors import GuardLimitError
from anyonwalk.paths import (
    IslandConfig,
    PathPair,
    WalkGeometry,
    braid_word,
    coin_sign_exponent,
    crossed_islands,
    enumerate_histories,
    enumerate_path_pairs,
    final_position,
    linking_profile,
    pair_braid_word,
    site_sequence,
    traversal_counts,
)

histories = st.lists(st.integers(0, 1), min_size=1, max_size=9).map(tuple)


class TestWalkGeometry:
    def test_default_start_site_is_center(self):
        assert WalkGeometry(n=9, t=2).s0 == 5
        assert WalkGeometry(n=10, t=2).s0 == 5
        assert WalkGeometry(n=11, t=2).s0 == 6

    def test_rejects_lattice_too_small_for_t(self):
        with pytest.raises(GuardLimitError):
            WalkGeometry(n=10, t=5)
        WalkGeometry(n=11, t=5)  # boundary case allowed

    def test_rejects_start_site_near_boundary(self):
        with pytest.raises(GuardLimitError):
            WalkGeometry(n=11, t=5, s0=3)

    def test_rejects_nonsense(self):
        with pytest.raises(ValueError):
            WalkGeometry(n=0, t=0)
        with pytest.raises(ValueError):
            WalkGeometry(n=5, t=-1)
        with pytest.raises(ValueError):
            WalkGeometry(n=9, t=1, s0=10)


class TestFinalPosition:
    def test_all_left(self):
        assert final_position((0, 0, 0), 5) == 2

    def test_all_right(self):
        assert final_position((1, 1, 1, 1), 0) == 4

    def test_mixed(self):
        assert final_position((1, 0, 1), 10) == 11

    @given(histories)
    def test_endpoint_parity(self, a):
        assert (final_position(a, 50) - 50) % 2 == len(a) % 2

    @given(histories)
    def test_matches_site_sequence(self, a):
        seq = site_sequence(a, 50)
        assert seq[0] == 50
        assert seq[-1] == final_position(a, 50)
        assert len(seq) == len(a) + 1
        assert all(abs(b - a_) == 1 for a_, b in zip(seq, seq[1:]))


class TestCoinSignExponent:
    def test_all_left_pair(self):
        assert coin_sign_exponent((0, 0, 0), (0, 0, 0)) == 0

    def test_all_right_pair(self):
        assert coin_sign_exponent((1, 1, 1, 1), (1, 1, 1, 1)) == 6

    def test_mixed_pair(self):
        # a = (1,1,0): one 1->1 transition; a' = (0,1,1): one more
        assert coin_sign_exponent((1, 1, 0), (0, 1, 1)) == 2

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            coin_sign_exponent((1, 0), (1,))


class TestTraversalCounts:
    def test_right_then_left_crosses_home_island_twice(self):
        assert traversal_counts((1, 0), 20) == {20: 2}

    def test_left_then_right_crosses_lower_island_twice(self):
        assert traversal_counts((0, 1), 20) == {19: 2}

    def test_two_rights_cross_two_islands(self):
        assert traversal_counts((1, 1), 20) == {20: 1, 21: 1}

    @given(histories)
    def test_total_count_equals_steps(self, a):
        assert sum(traversal_counts(a, 50).values()) == len(a)

    @given(histories)
    def test_crossed_islands_sequence_agrees(self, a):
        seq = crossed_islands(a, 50)
        counts = {}
        for s in seq:
            counts[s] = counts.get(s, 0) + 1
        assert counts == traversal_counts(a, 50)


class TestLinkingProfile:
    def test_identical_paths_have_zero_profile(self):
        for a in [(0,), (1, 0), (1, 1, 0, 1)]:
            profile = linking_profile(PathPair(a, a), 30)
            assert all(v == 0 for v in profile.links.values())
            assert profile.link(30) == 0

    def test_two_step_exchange(self):
        profile = linking_profile(PathPair((1, 0), (0, 1)), 30)
        assert profile.links == {30: 1, 29: -1}

    def test_four_step_oscillation(self):
        profile = linking_profile(PathPair((1, 0, 1, 0), (0, 1, 0, 1)), 30)
        assert profile.links == {30: 2, 29: -2}

    def test_endpoint_mismatch_rejected(self):
        from anyonwalk.errors import InadmissiblePairError

        with pytest.raises(InadmissiblePairError):
            linking_profile(PathPair((1, 1), (1, 0)), 30)

    def test_antisymmetry(self):
        fwd, bwd = (1, 1, 0, 0), (1, 0, 1, 0)
        p1 = linking_profile(PathPair(fwd, bwd), 30).links
        p2 = linking_profile(PathPair(bwd, fwd), 30).links
        assert p2 == {s: -v for s, v in p1.items()}

    def test_admissible_pairs_have_even_count_differences(self):
        s0, t = 30, 5
        for target in range(s0 - t, s0 + t + 1):
            for pair in enumerate_path_pairs(t, target, s0):
                ca = traversal_counts(pair.forward, s0)
                cb = traversal_counts(pair.backward, s0)
                for s in set(ca) | set(cb):
                    diff = ca.get(s, 0) - cb.get(s, 0)
                    assert diff % 2 == 0
                profile = linking_profile(pair, s0)
                for s, link in profile.links.items():
                    assert link == (ca.get(s, 0) - cb.get(s, 0)) // 2


class TestEnumeratePathPairs:
    def test_single_step_single_pair(self):
        pairs = list(enumerate_path_pairs(1, 31, 30))
        assert pairs == [PathPair((1,), (1,))]

    def test_two_step_return_pairs(self):
        pairs = list(enumerate_path_pairs(2, 30, 30))
        assert len(pairs) == 2
        assert {(p.forward, p.backward) for p in pairs} == {
            ((0, 1), (0, 1)),
            ((1, 0), (1, 0)),
        }

    def test_wrong_parity_is_empty(self):
        assert list(enumerate_path_pairs(2, 31, 30)) == []
        assert list(enumerate_path_pairs(3, 30, 30)) == []

    @pytest.mark.parametrize("t", [1, 2, 3, 4, 5, 6])
    def test_counts_match_last_bit_split(self, t):
        s0 = 40
        by_key = {}
        for a in enumerate_histories(t):
            key = (final_position(a, s0), a[-1])
            by_key[key] = by_key.get(key, 0) + 1
        for target in range(s0 - t, s0 + t + 1):
            expected = sum(
                by_key.get((target, b), 0) ** 2 for b in (0, 1)
            )
            got = sum(1 for _ in enumerate_path_pairs(t, target, s0))
            assert got == expected

    @pytest.mark.parametrize("t", [7, 8, 9, 10])
    def test_totals_identity_brute_force(self, t):
        # sum over targets of pair counts = sum over last bits of
        # (number of histories with that last bit) squared, restricted to
        # shared endpoints; verified from raw history counting alone.
        s0 = 2 * t + 5
        by_key = {}
        for a in enumerate_histories(t):
            key = (final_position(a, s0), a[-1])
            by_key[key] = by_key.get(key, 0) + 1
        total_pairs = sum(
            sum(1 for _ in enumerate_path_pairs(t, target, s0))
            for target in range(s0 - t, s0 + t + 1)
        )
        assert total_pairs == sum(c * c for c in by_key.values())

    def test_pairs_are_admissible(self):
        for pair in enumerate_path_pairs(4, 30, 30):
            assert pair.is_admissible
            assert pair.forward[-1] == pair.backward[-1]

    def test_inadmissible_pair_flagged(self):
        assert not PathPair((1, 0), (0, 1)).is_admissible  # last bits differ
        assert not PathPair((1, 1), (1, 0)).is_admissible  # endpoints differ


class TestBraidWord:
    def test_empty_config_gives_empty_word(self):
        config = IslandConfig((0,) * 9)
        for a in [(1,), (0, 1), (1, 1, 0)]:
            assert braid_word(a, config, 5).crossings == ()

    def test_right_move_over_two_strand_island(self):
        config = IslandConfig((0,) * 4 + (2,) + (0,) * 4)  # island 5 holds 2
        word = braid_word((1,), config, 5)
        assert word.strands == 3
        assert [sign for _, sign in word.crossings] == [1, 1]
        gens = [g for g, _ in word.crossings]
        assert sorted(gens) == [1, 2]

    def test_left_move_over_single_strand_island(self):
        config = IslandConfig((0,) * 3 + (1,) + (0,) * 5)  # island 4 holds 1
        word = braid_word((0,), config, 5)
        assert word.strands == 2
        assert word.crossings == ((1, 1),)

    def test_strand_count_covers_crossed_islands(self):
        config = IslandConfig((1, 0, 2, 3, 0, 1, 0, 0, 1))
        history = (1, 1, 0, 0)
        word = braid_word(history, config, 5)
        crossed = set(crossed_islands(history, 5))
        occupied = sum(config.occupation(s) for s in crossed)
        assert word.strands == 1 + occupied
        # islands 5 (empty) and 6 (one strand) are crossed; island 6 twice
        assert word.crossings == ((1, 1), (1, 1))

    def test_pair_word_signs(self):
        config = IslandConfig((0, 0, 1, 2, 1, 0, 0, 0, 0))
        pair = PathPair((1, 0, 0, 1), (0, 1, 1, 0))
        word = pair_braid_word(pair, config, 5)
        fwd = braid_word(pair.forward, config, 5, islands=None)
        # forward part keeps + signs, reversed part contributes - signs
        assert {s for _, s in word.crossings} <= {1, -1}
        assert len(word.crossings) >= len(fwd.crossings)


class TestIslandConfig:
    def test_rejects_negative_occupations(self):
        with pytest.raises(ValueError):
            IslandConfig((1, -1))

    def test_accessor_is_one_based(self):
        config = IslandConfig((3, 1, 4))
        assert [config.occupation(s) for s in (1, 2, 3)] == [3, 1, 4]
        with pytest.raises(ValueError):
            config.occupation(0)

    def test_uniform_factory(self):
        assert IslandConfig.uniform(4, 2).occupations == (2, 2, 2, 2)
