"""Walk combinatorics: coin histories, traversal counts, braid words.

Conventions.  Islands are labeled 1..n left to right and island s sits
between walker sites s and s+1, so a walker at site s has island s-1 on
its left and island s on its right.  A coin history is a tuple of bits,
one per step: bit 1 moves the walker right (site s -> s+1, crossing every
anyon of island s), bit 0 moves it left (site s -> s-1, crossing island
s-1).  The walker winds counterclockwise, so every crossing in forward
evolution is a positive braid crossing; reversed (bra-side) words carry
negative crossings.

A pair of histories (forward, backward) with a common start describes one
ket-bra term of the walker density matrix.  The pair is admissible when
both paths end at the same site and share their final coin bit; only
admissible pairs contribute to position distributions.  For an admissible
pair the traversal counts of every island agree mod 2 and the linking
number of the pair's closed world-line with island s is

    l_s = (c_fwd(s) - c_bwd(s)) / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .bracket import BraidWord
from .errors import GuardLimitError, InadmissiblePairError

__all__ = [
    "WalkGeometry",
    "IslandConfig",
    "PathPair",
    "LinkingProfile",
    "final_position",
    "site_sequence",
    "crossed_islands",
    "traversal_counts",
    "coin_sign_exponent",
    "linking_profile",
    "enumerate_histories",
    "enumerate_path_pairs",
    "braid_word",
    "pair_braid_word",
]

CoinHistory = tuple[int, ...]


def _check_history(history) -> CoinHistory:
    bits = tuple(history)
    if any(b not in (0, 1) for b in bits):
        raise ValueError(f"coin history must contain only 0/1 bits: {bits!r}")
    return bits


@dataclass(frozen=True)
class WalkGeometry:
    """Lattice of n islands walked for t steps starting at site s0.

    s0 defaults to ceil(n/2).  The geometry must keep the walker away from
    the periodic boundary: s0 - t >= 1 and s0 + t <= n, and n >= 2t + 1 so
    the centered default always fits.
    """

    n: int
    t: int
    s0: int = 0

    def __post_init__(self):
        if self.n < 1 or self.t < 0:
            raise ValueError(f"need n >= 1 and t >= 0, got n={self.n} t={self.t}")
        if self.s0 == 0:
            object.__setattr__(self, "s0", math.ceil(self.n / 2))
        if not 1 <= self.s0 <= self.n:
            raise ValueError(f"s0={self.s0} outside [1, {self.n}]")
        if self.n < 2 * self.t + 1:
            raise GuardLimitError(
                f"n={self.n} too small for t={self.t}: need n >= 2t+1 so the "
                "walker cannot wrap the boundary"
            )
        if self.s0 - self.t < 1 or self.s0 + self.t > self.n:
            raise GuardLimitError(
                f"start site s0={self.s0} within {self.t} steps of the boundary"
            )


@dataclass(frozen=True)
class IslandConfig:
    """Occupation numbers m_s >= 0 of the n islands, index 1-based."""

    occupations: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "occupations", tuple(int(m) for m in self.occupations))
        if any(m < 0 for m in self.occupations):
            raise ValueError("occupations must be non-negative")

    @property
    def n(self) -> int:
        return len(self.occupations)

    def occupation(self, s: int) -> int:
        if not 1 <= s <= self.n:
            raise ValueError(f"island {s} outside [1, {self.n}]")
        return self.occupations[s - 1]

    @classmethod
    def uniform(cls, n: int, m: int = 1) -> "IslandConfig":
        return cls((m,) * n)


def final_position(history, s0: int) -> int:
    bits = _check_history(history)
    return s0 + sum(2 * b - 1 for b in bits)


def site_sequence(history, s0: int) -> tuple[int, ...]:
    """Sites visited, length t + 1, starting with s0."""
    bits = _check_history(history)
    sites = [s0]
    for b in bits:
        sites.append(sites[-1] + 2 * b - 1)
    return tuple(sites)


def crossed_islands(history, s0: int) -> tuple[int, ...]:
    """Island crossed at each step: step k crosses island s_(k-1) - 1 + a_k."""
    bits = _check_history(history)
    islands = []
    site = s0
    for b in bits:
        islands.append(site - 1 + b)
        site += 2 * b - 1
    return tuple(islands)


def traversal_counts(history, s0: int) -> dict[int, int]:
    """Number of times each island is crossed; only crossed islands appear."""
    counts: dict[int, int] = {}
    for s in crossed_islands(history, s0):
        counts[s] = counts.get(s, 0) + 1
    return counts


def coin_sign_exponent(forward, backward) -> int:
    """z(a, a') = sum_(k=1)^(t-1) (a_k a_(k+1) + a'_k a'_(k+1)).

    The Hadamard coin contributes (-1)^z 2^(-t) to the pair's weight; only
    consecutive 1-bits (right moves) pick up signs.
    """
    a = _check_history(forward)
    b = _check_history(backward)
    if len(a) != len(b):
        raise ValueError("histories must have equal length")
    z = 0
    for k in range(len(a) - 1):
        z += a[k] * a[k + 1] + b[k] * b[k + 1]
    return z


@dataclass(frozen=True)
class PathPair:
    """A ket-bra pair of coin histories with a common start site."""

    forward: CoinHistory
    backward: CoinHistory

    def __post_init__(self):
        object.__setattr__(self, "forward", _check_history(self.forward))
        object.__setattr__(self, "backward", _check_history(self.backward))
        if len(self.forward) != len(self.backward):
            raise ValueError("forward and backward histories must have equal length")

    @property
    def t(self) -> int:
        return len(self.forward)

    @property
    def is_admissible(self) -> bool:
        if self.t == 0:
            return True
        return (
            sum(self.forward) == sum(self.backward)
            and self.forward[-1] == self.backward[-1]
        )


@dataclass(frozen=True)
class LinkingProfile:
    """Linking numbers and traversal counts of an admissible pair.

    links holds every island crossed by either history (value may be 0);
    uncrossed islands are implicitly unlinked.
    """

    links: dict[int, int] = field(compare=False)
    counts_forward: dict[int, int] = field(compare=False)
    counts_backward: dict[int, int] = field(compare=False)

    @property
    def islands(self) -> tuple[int, ...]:
        return tuple(sorted(self.links))

    def link(self, s: int) -> int:
        return self.links.get(s, 0)


def linking_profile(pair: PathPair, s0: int) -> LinkingProfile:
    # Equal endpoints alone guarantee integer linking numbers: an island is
    # crossed an odd number of times exactly when it separates the endpoints,
    # so equal endpoints force even per-island count differences.
    if sum(pair.forward) != sum(pair.backward):
        raise InadmissiblePairError(
            f"pair endpoints differ: {pair.forward} / {pair.backward}"
        )
    cf = traversal_counts(pair.forward, s0)
    cb = traversal_counts(pair.backward, s0)
    links = {}
    for s in set(cf) | set(cb):
        diff = cf.get(s, 0) - cb.get(s, 0)
        assert diff % 2 == 0, "equal endpoints imply even count differences"
        links[s] = diff // 2
    return LinkingProfile(links, cf, cb)


def enumerate_histories(t: int):
    """All 2^t coin histories in lexicographic order."""
    if t < 0:
        raise ValueError("t must be >= 0")
    for idx in range(1 << t):
        yield tuple((idx >> k) & 1 for k in reversed(range(t)))


def enumerate_path_pairs(t: int, target: int, s0: int):
    """Admissible pairs of t-step histories from s0 ending at target.

    Deterministic order: grouped by final coin bit (0 before 1), then
    lexicographic in (forward, backward).
    """
    displacement = target - s0
    if (displacement + t) % 2 != 0 or abs(displacement) > t:
        return
    by_bit: dict[int, list[CoinHistory]] = {0: [], 1: []}
    for h in enumerate_histories(t):
        if s0 + 2 * sum(h) - t == target:
            by_bit[h[-1]].append(h)
    for bit in (0, 1):
        group = by_bit[bit]
        for fwd in group:
            for bwd in group:
                yield PathPair(fwd, bwd)


def braid_word(history, config: IslandConfig, s0: int, islands=None) -> BraidWord:
    """Braid word of one history acting on the chosen island strands.

    Args:
        history: coin history walked from s0.
        config: island occupations.
        islands: islands represented as strands, sorted ascending; defaults
            to the occupied islands this history crosses.  Islands whose
            anyons are never crossed close into disjoint unknots under the
            Markov closure, and at the calibrated root each contributes a
            loop factor equal to the quantum dimension, so dropping them
            leaves every normalized trace unchanged.

    Returns:
        BraidWord on 1 + sum of occupations strands, all crossings positive.
    """
    bits = _check_history(history)
    if islands is None:
        islands = sorted(s for s in set(crossed_islands(bits, s0)) if config.occupation(s) > 0)
    else:
        islands = sorted(islands)
    occ = {s: config.occupation(s) for s in islands}
    strands = 1 + sum(occ.values())

    def walker_pos(site: int) -> int:
        return 1 + sum(m for s, m in occ.items() if s < site)

    crossings: list[tuple[int, int]] = []
    site = s0
    pos = walker_pos(s0)
    for b in bits:
        island = site - 1 + b
        m = occ.get(island, 0)
        if b == 1:
            for _ in range(m):
                crossings.append((pos, 1))
                pos += 1
            site += 1
        else:
            for _ in range(m):
                crossings.append((pos - 1, 1))
                pos -= 1
            site -= 1
    assert pos == walker_pos(site)
    return BraidWord(strands, tuple(crossings))


def pair_braid_word(pair: PathPair, config: IslandConfig, s0: int) -> BraidWord:
    """Composite word B(backward)^dagger B(forward) on the involved strands.

    Involved islands are the occupied islands crossed by either history;
    both one-sided words are built over the same strand layout.
    """
    involved = sorted(
        s
        for s in set(crossed_islands(pair.forward, s0)) | set(crossed_islands(pair.backward, s0))
        if config.occupation(s) > 0
    )
    fwd = braid_word(pair.forward, config, s0, islands=involved)
    bwd = braid_word(pair.backward, config, s0, islands=involved)
    return BraidWord(fwd.strands, fwd.crossings + bwd.inverse().crossings)
