"""Link invariants of walker world-lines: fusion traces, tau, Arf.

The fusion trace of a pair word is the Markov-normalized bracket of its
closure (see bracket.py).  For Ising anyons the trace admits a closed form
in terms of linking numbers l_s, the mod-2 Conway coefficient c2 and a
three-component invariant tau(s', s'') in {0, 1} that detects Borromean
entanglement of the walker with two islands.  This module extracts those
quantities from path pairs; the closed form itself lives in ising.py.

tau extraction inverts the closed form on the sub-configuration where only
islands s' and s'' are occupied, each by a single anyon: the three-strand
sub-word's trace equals (-i)^(l_s'/2) (-i)^(l_s''/2) (-1)^tau whenever both
linking numbers are even, so dividing out the quarter-twist phases leaves
a +-1 residue.  Odd linking numbers make the l-tilde factor vanish and tau
unrecoverable (set to 0, the convention used throughout), and an odd
traversal-count difference means the three-strand closure has fewer than
three components, where tau is not defined by this method (also 0).
"""

from __future__ import annotations

from functools import lru_cache

from .bracket import BraidWord, markov_trace
from .errors import ConventionError
from .paths import (
    IslandConfig,
    PathPair,
    crossed_islands,
    linking_profile,
    pair_braid_word,
)

__all__ = [
    "writhe",
    "conway_c2",
    "fusion_trace_oracle",
    "tau_from_events",
    "tau_parity",
    "tau_matrix",
    "arf_invariant",
    "jones_at_point",
]

_TAU_TOL = 1e-8


def writhe(pair: PathPair, config: IslandConfig, s0: int) -> int:
    """Total crossing sign of the pair word: w = 2 sum_s m_s l_s."""
    profile = linking_profile(pair, s0)
    return 2 * sum(config.occupation(s) * l for s, l in profile.links.items())


def conway_c2(l: int) -> int:
    """Conway coefficient c2 of the (2, 2l) torus link, l(l^2 - 1)/6.

    For even l it reduces to l/2 mod 2, which is how it enters the Arf
    invariant.
    """
    num = l * (l * l - 1)
    assert num % 6 == 0
    return num // 6


def fusion_trace_oracle(
    pair: PathPair, config: IslandConfig, s0: int, method: str = "tl"
) -> complex:
    """Bracket-based fusion trace of an admissible pair word.

    Evaluates the Markov-normalized bracket of B(backward)^dagger
    B(forward) over the involved strands; islands never crossed contribute
    unit factors at the calibrated root and are dropped.
    """
    if not pair.is_admissible:
        # still a well-defined braid closure, but the walk never weights it
        raise ValueError("fusion_trace_oracle expects an admissible pair")
    word = pair_braid_word(pair, config, s0)
    return markov_trace(word, method=method)


@lru_cache(maxsize=1 << 18)
def _trace3(crossings: tuple[tuple[int, int], ...]) -> complex:
    return markov_trace(BraidWord(3, crossings))


def _island_events(history, s0: int, island_a: int, island_b: int, steps):
    events = []
    for isl in crossed_islands(history, s0)[: steps if steps is not None else None]:
        if isl == island_a:
            events.append(1)
        elif isl == island_b:
            events.append(2)
    return events


@lru_cache(maxsize=1 << 18)
def tau_from_events(fwd: tuple[int, ...], bwd: tuple[int, ...]) -> int:
    """tau from generator-code event lists (1 = lower island, 2 = upper).

    ``fwd``/``bwd`` list, in walk order, which of the two islands each
    history crossed.  This is the cached core behind :func:`tau_parity`;
    bulk consumers (disorder averages, correlators) call it directly with
    pre-sliced event tuples.

    Raises:
        ConventionError: the trace residue is not +-1 within tolerance.
    """
    d_a = fwd.count(1) - bwd.count(1)
    d_b = fwd.count(2) - bwd.count(2)
    if d_a % 2 or d_b % 2:
        return 0
    l_a, l_b = d_a // 2, d_b // 2
    if l_a % 2 or l_b % 2:
        return 0
    crossings = tuple((g, 1) for g in fwd) + tuple((g, -1) for g in reversed(bwd))
    word = BraidWord(3, crossings).reduced_for_closure()
    if not word.crossings:
        return 0
    trace = _trace3(word.crossings)
    expected = (-1j) ** ((l_a // 2 + l_b // 2) % 4)
    residue = trace / expected
    if abs(residue - 1) < _TAU_TOL:
        return 0
    if abs(residue + 1) < _TAU_TOL:
        return 1
    raise ConventionError(
        "three-strand trace residue is not +-1",
        diagnostics={
            "links": (l_a, l_b),
            "trace": repr(trace),
            "residue": repr(residue),
        },
    )


def tau_parity(
    pair: PathPair, island_a: int, island_b: int, s0: int, steps: int | None = None
) -> int:
    """tau(island_a, island_b) of the pair word, in {0, 1}.

    Computed on the sub-configuration with exactly one anyon on each of
    the two islands.  ``steps`` truncates braiding after that many walk
    steps (both histories keep only their first ``steps`` crossings),
    which is how intermediate-time tau values are defined; the truncated
    word need not come from an admissible pair.

    Raises:
        ConventionError: the trace residue is not +-1 within tolerance.
    """
    if island_a == island_b:
        raise ValueError("tau needs two distinct islands")
    sa, sb = sorted((island_a, island_b))
    fwd = _island_events(pair.forward, s0, sa, sb, steps)
    bwd = _island_events(pair.backward, s0, sa, sb, steps)
    return tau_from_events(tuple(fwd), tuple(bwd))


def tau_matrix(pair: PathPair, s0: int, steps: int | None = None) -> dict[tuple[int, int], int]:
    """Sparse tau over island pairs crossed by the (possibly truncated) word.

    Returns only the entries equal to 1; anything absent is 0.  Island
    pairs where either island is crossed fewer than twice in total cannot
    produce tau = 1 and are skipped.
    """
    cut = steps if steps is not None else None
    fwd = crossed_islands(pair.forward, s0)[:cut]
    bwd = crossed_islands(pair.backward, s0)[:cut]
    counts: dict[int, int] = {}
    for isl in fwd:
        counts[isl] = counts.get(isl, 0) + 1
    for isl in bwd:
        counts[isl] = counts.get(isl, 0) + 1
    islands = sorted(s for s, c in counts.items() if c >= 2)
    out: dict[tuple[int, int], int] = {}
    for i, sa in enumerate(islands):
        for sb in islands[i + 1 :]:
            if tau_parity(pair, sa, sb, s0, steps=steps):
                out[(sa, sb)] = 1
    return out


def arf_invariant(pair: PathPair, config: IslandConfig, s0: int) -> int:
    """Arf invariant of the pair's closed link, in {0, 1}.

    Assembled from the two- and three-component sublinks of walker plus
    island strands:

    * each of the m_s walker+strand sublinks of island s contributes
      c2(l_s);
    * each of the m_s (m_s - 1) / 2 walker+strand+strand sublinks within
      island s contributes the triple invariant of the walker around a
      two-cable, which equals l_s / 2 mod 2 = c2(l_s) mod 2 (checked
      against the bracket oracle in the test suite), for a combined
      per-island count of m_s (m_s + 1) / 2 copies of c2(l_s);
    * each distinct-island strand pair contributes m_s' m_s'' copies of
      tau(s', s'').

    Requires total properness (every linking number with an occupied
    island even); otherwise the Arf invariant is undefined.
    """
    profile = linking_profile(pair, s0)
    occupied = {s: config.occupation(s) for s in profile.links if config.occupation(s) > 0}
    for s in occupied:
        if profile.link(s) % 2:
            raise ValueError(
                f"arf undefined: odd linking number {profile.link(s)} at island {s}"
            )
    total = sum(
        (m * (m + 1) // 2) * conway_c2(profile.link(s)) for s, m in occupied.items()
    )
    taus = tau_matrix(pair, s0)
    for (sa, sb), tau in taus.items():
        total += occupied.get(sa, 0) * occupied.get(sb, 0) * tau
    return total % 2


def jones_at_point(pair: PathPair, config: IslandConfig, s0: int) -> complex:
    """Jones polynomial of the pair's closure at t = i, from the bracket.

    V = (-A^3)^(-w) <L> with w the word writhe, evaluated over involved
    strands (spectator unknot factors divided out).
    """
    from .bracket import calibrate_root, kauffman_bracket

    word = pair_braid_word(pair, config, s0)
    root = calibrate_root()
    value = kauffman_bracket(word)
    return value * (-root.a**3) ** (-word.writhe)
