"""Link invariants of pair words: fusion traces, tau, Conway c2, Arf, Jones."""

import math
import random

import pytest

from anyonwalk.bracket import closure_components
from anyonwalk.errors import ConventionError
from anyonwalk.invariants import (
    arf_invariant,
    conway_c2,
    fusion_trace_oracle,
    jones_at_point,
    tau_from_events,
    tau_matrix,
    tau_parity,
    writhe,
)
from anyonwalk.paths import (
    IslandConfig,
    PathPair,
    enumerate_path_pairs,
    linking_profile,
    pair_braid_word,
)

S0 = 10

# Borromean-type pair: forward winds island 9 then 10 then 9 again; the
# backward partner visits them in the opposite order, producing zero linking
# with both islands yet an unremovable triple entanglement.
BORROMEAN_PAIR = PathPair((0, 1, 1, 0, 0, 1), (1, 0, 0, 1, 0, 1))


def single_island_config(m, n=21, island=S0):
    occ = [0] * n
    occ[island - 1] = m
    return IslandConfig(tuple(occ))


def winding_pair(l):
    """Admissible pair whose forward path winds island S0 exactly l times.

    The backward path stays below S0, so with only island S0 occupied the
    trace depends on l alone.
    """
    return PathPair((1, 0) * l + (0, 1), (0, 1) * (l + 1))


class TestConwayC2:
    def test_frozen_values(self):
        assert [conway_c2(l) for l in range(-3, 5)] == [-4, -1, 0, 0, 0, 1, 4, 10]

    def test_even_linking_parity_reduction(self):
        for half in range(-6, 7):
            assert conway_c2(2 * half) % 2 == half % 2


class TestFusionTraceOracle:
    def test_identical_paths_give_one(self):
        config = IslandConfig((2, 1, 0, 3, 1, 0, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 0))
        for a in [(1, 0), (0, 1, 1, 0), (1, 1, 0, 0)]:
            value = fusion_trace_oracle(PathPair(a, a), config, S0)
            assert value == pytest.approx(1.0, abs=1e-12)

    def test_empty_config_gives_one(self):
        config = IslandConfig((0,) * 21)
        for target_pair in enumerate_path_pairs(3, S0 + 1, S0):
            value = fusion_trace_oracle(target_pair, config, S0)
            assert value == pytest.approx(1.0, abs=1e-12)

    def test_single_strand_single_wind_vanishes(self):
        # walker and one anyon form a Hopf link
        value = fusion_trace_oracle(winding_pair(1), single_island_config(1), S0)
        assert abs(value) < 1e-12

    def test_inadmissible_pair_rejected(self):
        with pytest.raises(ValueError):
            fusion_trace_oracle(PathPair((1, 0), (0, 1)), single_island_config(1), S0)

    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    @pytest.mark.parametrize("l", [1, 2, 3, 4])
    def test_single_island_winding_table(self, m, l):
        value = fusion_trace_oracle(winding_pair(l), single_island_config(m), S0)
        if l % 2:
            expected = 0j
        else:
            expected = (-1j) ** (((l // 2) * m * m) % 4)
        assert value == pytest.approx(expected, abs=1e-10)

    def test_methods_agree(self):
        config = single_island_config(2)
        for l in (1, 2):
            tl = fusion_trace_oracle(winding_pair(l), config, S0, method="tl")
            sk = fusion_trace_oracle(winding_pair(l), config, S0, method="skein")
            assert tl == pytest.approx(sk, abs=1e-10)


class TestTau:
    def test_commutator_events_give_tau_one(self):
        assert tau_from_events((1, 1, 2, 2), (2, 2, 1, 1)) == 1

    def test_identical_events_give_zero(self):
        assert tau_from_events((1, 1, 2, 2), (1, 1, 2, 2)) == 0
        assert tau_from_events((), ()) == 0

    def test_odd_count_difference_gives_zero(self):
        assert tau_from_events((1, 1, 2), (2, 2, 1)) == 0

    def test_odd_linking_gives_zero(self):
        # counts differ by 2 -> l = 1, odd, l-tilde kills the term
        assert tau_from_events((1, 1, 2, 2), (2, 2)) == 0

    def test_unrealizable_events_raise(self):
        # Whitehead-type clasp: not a walk word, residue is not a sign
        with pytest.raises(ConventionError):
            tau_from_events((1, 1, 2, 2), (2, 1, 1, 2))

    def test_borromean_walk_pair(self):
        assert BORROMEAN_PAIR.is_admissible
        profile = linking_profile(BORROMEAN_PAIR, S0)
        assert all(v == 0 for v in profile.links.values())
        assert tau_parity(BORROMEAN_PAIR, 9, 10, S0) == 1

    def test_tau_needs_distinct_islands(self):
        with pytest.raises(ValueError):
            tau_parity(BORROMEAN_PAIR, 9, 9, S0)

    def test_tau_matrix_sparse(self):
        assert tau_matrix(BORROMEAN_PAIR, S0) == {(9, 10): 1}

    def test_tau_matrix_truncation(self):
        assert tau_matrix(BORROMEAN_PAIR, S0, steps=2) == {}

    def test_tau_symmetric_in_island_order(self):
        a = tau_parity(BORROMEAN_PAIR, 9, 10, S0)
        b = tau_parity(BORROMEAN_PAIR, 10, 9, S0)
        assert a == b == 1


class TestWrithe:
    def test_borromean_writhe_zero(self):
        config = IslandConfig((0,) * 8 + (1, 1) + (0,) * 8)
        assert writhe(BORROMEAN_PAIR, config, S0) == 0

    def test_writhe_formula_single_island(self):
        for m in (1, 2, 3):
            for l in (1, 2, 3):
                config = single_island_config(m)
                w = writhe(winding_pair(l), config, S0)
                assert w == 2 * m * l

    def test_writhe_matches_braid_word(self):
        rng = random.Random(7)
        config = IslandConfig((1, 0, 2, 1, 0, 1, 2, 0, 1, 1, 0, 2, 1, 0, 0, 0, 0, 0))
        for _ in range(30):
            t = rng.randrange(2, 7)
            target = S0 + rng.choice(range(-t, t + 1, 2))
            pairs = list(enumerate_path_pairs(t, target, S0))
            if not pairs:
                continue
            pair = rng.choice(pairs)
            word = pair_braid_word(pair, config, S0)
            assert writhe(pair, config, S0) == word.writhe


class TestArf:
    def test_borromean_arf_is_one(self):
        config = IslandConfig((0,) * 8 + (1, 1) + (0,) * 8)
        assert arf_invariant(BORROMEAN_PAIR, config, S0) == 1

    def test_unlinked_pair_arf_zero(self):
        config = single_island_config(1)
        pair = PathPair((1, 0, 1, 0), (1, 0, 1, 0))
        assert arf_invariant(pair, config, S0) == 0

    @pytest.mark.parametrize("m", [1, 2, 3])
    @pytest.mark.parametrize("l", [2, 4])
    def test_single_island_arf(self, m, l):
        config = single_island_config(m)
        arf = arf_invariant(winding_pair(l), config, S0)
        expected = ((m * (m + 1) // 2) * conway_c2(l)) % 2
        assert arf == expected

    def test_odd_linking_rejected(self):
        config = single_island_config(1)
        with pytest.raises(ValueError):
            arf_invariant(winding_pair(1), config, S0)


class TestJonesAtPoint:
    def test_borromean_value(self):
        config = IslandConfig((0,) * 8 + (1, 1) + (0,) * 8)
        value = jones_at_point(BORROMEAN_PAIR, config, S0)
        assert value == pytest.approx(-2.0, abs=1e-10)

    def test_proper_links_satisfy_arf_formula(self):
        # V(i) = (-sqrt(2))^(c-1) * (-1)^arf for proper links, with the
        # principal branch of t^(1/2).  The bracket substitutes
        # t^(1/2) = -A^(-2), flipping the sign once per extra component,
        # so the bracket-side value is (+sqrt(2))^(c-1) * (-1)^arf.
        rng = random.Random(11)
        checked = 0
        for _ in range(60):
            t = rng.randrange(2, 7)
            target = S0 + rng.choice(range(-t, t + 1, 2))
            pairs = list(enumerate_path_pairs(t, target, S0))
            if not pairs:
                continue
            pair = rng.choice(pairs)
            occ = [0] * 21
            for s in range(S0 - t, S0 + t + 1):
                occ[s - 1] = rng.choice((0, 1, 1, 2))
            config = IslandConfig(tuple(occ))
            profile = linking_profile(pair, S0)
            proper = all(
                profile.link(s) % 2 == 0
                for s in profile.links
                if config.occupation(s) > 0
            )
            value = jones_at_point(pair, config, S0)
            if not proper:
                assert abs(value) < 1e-10
                continue
            word = pair_braid_word(pair, config, S0)
            c = closure_components(word)
            arf = arf_invariant(pair, config, S0)
            expected = math.sqrt(2.0) ** (c - 1) * (-1.0) ** arf
            assert value == pytest.approx(expected, abs=1e-8)
            checked += 1
        assert checked >= 20
