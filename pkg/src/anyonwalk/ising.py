"""Ising anyonic walks: closed-form fusion traces and their averages.

For Ising anyons the pair weight carries the Markov trace of the walker's
braid closure, which collapses to a closed form in link invariants of the
pair word:

    trY = prod over occupied islands of [l_s even] * (-i)^((l_s/2) m_s^2)
          * prod over island pairs of (-1)^(m_s' m_s'' tau(s', s''))

with l_s the linking numbers and tau the three-component Milnor invariant
(see invariants.py).  The quarter-phase exponent counts strand pairs, not
strands: each of the m_s walker+strand sublinks contributes l_s/2, and
each of the m_s (m_s - 1) / 2 walker+strand+strand sublinks within the
same island contributes another l_s/2 (two parallel strands of one island
are a cable of a single strand, so their triple invariant follows from
the two-strand case), for m_s^2 in total.  Agreement of all of this with
the bracket-valued oracle is enforced by the test suite, not assumed.
The trace is 4-periodic (indeed 2-periodic) in every occupation number.

Averaging over a full period m_s in {1..4} conditions each island on its
occupation parity eps_s: odd occupations keep the quarter phase
(-i)^(l_s/2), even ones cancel it, so the average is the Z4 Gauss sum

    2^(-n) sum over eps in {0,1}^n of i^(-(l_s/2) eps_s)
                                     (-1)^(sum tau eps eps'),

an exact Gaussian integer over a power of two, evaluated in gf2.py.  Any
odd l_s still kills the pair outright.  Pairs whose traversal counts
agree mod 4 island by island are exactly the ones surviving that filter,
which is what the averaged engine prunes by.
"""

from __future__ import annotations

import bisect
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .abelian import history_arrays, resolve_workers, sample_rng
from .disorder import OccupationModel
from .dists import SpatialDistribution, TimeSeries
from .errors import DegenerateNormalizationError, GuardLimitError
from .gf2 import (
    brute_force_gauss_sum,
    brute_force_z4_sum,
    quadratic_gauss_sum,
    z4_gauss_sum,
)
from .invariants import tau_from_events, tau_matrix
from .paths import IslandConfig, PathPair, WalkGeometry, crossed_islands, linking_profile

__all__ = [
    "ISING_ENUM_GUARD",
    "ISING_ENUM_MAX",
    "CORRELATOR_GUARD",
    "ising_trace_formula",
    "ising_pair_trace",
    "averaged_pair_trace",
    "t_coefficient",
    "ising_fixed_distribution",
    "ising_mc_distribution",
    "ising_averaged_distribution",
    "ising_variance_series",
    "FusionSignTable",
    "fusion_sign_table",
    "CorrelatorResult",
    "correlator",
]

ISING_ENUM_GUARD = 12
ISING_ENUM_MAX = 14
CORRELATOR_GUARD = 12
DEGENERATE_TOL = 1e-12
MC_CHUNK = 16

_I_POWERS = (1 + 0j, -1j, -1 + 0j, 1j)  # exact (-i)^k for k mod 4


def ising_trace_formula(
    links: Mapping[int, int],
    config: IslandConfig,
    tau: Mapping[tuple[int, int], int],
) -> complex:
    """Closed-form fusion trace from linking data and tau.

    ``links`` maps island -> linking number (missing means 0); ``tau`` maps
    distinct island pairs -> tau value (missing means 0).  Unoccupied
    islands drop out entirely, whatever their linking number.  The
    quarter-phase exponent (l_s/2) m_s^2 carries the same-island strand
    pairs (see the module docstring); same-island entries never appear in
    ``tau``.
    """
    phase_exp = 0
    for s, link in links.items():
        m = config.occupation(s)
        if m == 0:
            continue
        if link % 2:
            return 0j
        phase_exp += (link // 2) * m * m
    sign_exp = 0
    for (sa, sb), tau_val in tau.items():
        if tau_val:
            sign_exp += config.occupation(sa) * config.occupation(sb)
    value = _I_POWERS[phase_exp % 4]
    return -value if sign_exp % 2 else value


def ising_pair_trace(pair: PathPair, config: IslandConfig, s0: int) -> complex:
    """Closed-form trace of an admissible pair word (formula route).

    The independent route to the same number is
    :func:`anyonwalk.invariants.fusion_trace_oracle`, which evaluates the
    bracket of the actual braid closure.
    """
    profile = linking_profile(pair, s0)
    taus = tau_matrix(pair, s0)
    return ising_trace_formula(profile.links, config, taus)


def t_coefficient(terms: Iterable[tuple[int, int]], n_vars: int, method: str = "fast") -> float:
    """T = 2^(-n) sum over m in {0,1}^n of (-1)^(sum over terms m_i m_j).

    Variables absent from every term average to a factor 1, so ``n_vars``
    only needs to cover the indices actually appearing.  ``method`` picks
    the evaluation route: "fast" (hyperbolic-pair extraction) or "brute"
    (direct summation, guarded).
    """
    terms = list(terms)
    if method == "fast":
        s = quadratic_gauss_sum(n_vars, terms)
    elif method == "brute":
        s = brute_force_gauss_sum(n_vars, terms)
    else:
        raise ValueError(f"unknown method {method!r}")
    return s / float(2**n_vars)


def averaged_pair_trace(pair: PathPair, s0: int, method: str = "fast") -> complex:
    """Full-period average of the pair trace, exact.

    Zero whenever some linking number is odd; otherwise the parity-
    conditioned Z4 Gauss sum of the module docstring, a Gaussian integer
    divided by 2^(number of involved islands).  Islands with l_s = 0 and
    no tau coupling average to a factor 1 and are dropped.  When every
    l_s = 0 mod 8 this reduces to the real coefficient of
    :func:`t_coefficient`; ``method`` picks the Gauss-sum route ("fast"
    or "brute") for audit purposes.
    """
    profile = linking_profile(pair, s0)
    links = profile.links
    if any(link % 2 for link in links.values()):
        return 0j
    taus = tau_matrix(pair, s0)
    islands = sorted(
        {s for s, link in links.items() if link % 8} | {s for term in taus for s in term}
    )
    if not islands:
        return 1 + 0j
    index = {s: k for k, s in enumerate(islands)}
    linear = [(-(links.get(s, 0) // 2)) % 4 for s in islands]
    terms = [(index[sa], index[sb]) for sa, sb in sorted(taus)]
    if method == "fast":
        s_val = z4_gauss_sum(len(islands), linear, terms)
    elif method == "brute":
        s_val = brute_force_z4_sum(len(islands), linear, terms)
    else:
        raise ValueError(f"unknown method {method!r}")
    return s_val / float(2 ** len(islands))


def _pair_tau_terms(fwd_isl, bwd_isl, eligible=None):
    """tau = 1 island pairs of the word (forward, backward^-1).

    ``eligible`` restricts candidate islands (e.g. to odd occupations,
    which are the only ones whose tau affects the trace).  Islands crossed
    fewer than twice in total cannot give tau = 1 and are skipped.
    """
    counts: dict[int, int] = {}
    for isl in fwd_isl:
        counts[isl] = counts.get(isl, 0) + 1
    for isl in bwd_isl:
        counts[isl] = counts.get(isl, 0) + 1
    islands = sorted(
        s for s, c in counts.items() if c >= 2 and (eligible is None or s in eligible)
    )
    terms = []
    for i, sa in enumerate(islands):
        for sb in islands[i + 1 :]:
            fev = tuple(1 if s == sa else 2 for s in fwd_isl if s == sa or s == sb)
            bev = tuple(1 if s == sa else 2 for s in bwd_isl if s == sa or s == sb)
            if tau_from_events(fev, bev):
                terms.append((sa, sb))
    return terms


def _class_groups(arrs, extra_key=None):
    """Group history indices by admissibility key (plus optional columns)."""
    columns = [arrs.endpoints, arrs.last_bits.astype(np.int64)]
    if extra_key is not None:
        columns.append(extra_key.astype(np.int64))
    key = np.column_stack(columns)
    _, inverse = np.unique(key, axis=0, return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    boundaries = np.flatnonzero(np.diff(inverse[order])) + 1
    return [grp for grp in np.split(order, boundaries)]


def _check_ising_guard(t: int, guard: int) -> None:
    if guard > ISING_ENUM_MAX:
        raise GuardLimitError(
            f"Ising enumeration capped at t <= {ISING_ENUM_MAX} "
            f"(mod-16 classes and word lengths are validated to there)"
        )
    if t > guard:
        raise GuardLimitError(f"Ising enumeration limited to t <= {guard}, got {t}")


def ising_fixed_distribution(
    config: IslandConfig,
    geometry: WalkGeometry,
    guard: int = ISING_ENUM_GUARD,
) -> SpatialDistribution:
    """Site distribution for one fixed island configuration.

    Sums 2^(-t) (-1)^(z+z') trY over ordered admissible pairs.  Every
    contribution is a dyadic rational, so normalization to exactly 1.0 is
    a genuine self-check, not a rounding accident.
    """
    if config.n != geometry.n:
        raise ValueError("config size does not match geometry")
    t, s0 = geometry.t, geometry.s0
    _check_ising_guard(t, guard)
    arrs = history_arrays(t, s0)
    occ = np.asarray(config.occupations, dtype=np.int64)
    base = arrs.island_base
    mwin = occ[base - 1 : base - 1 + 2 * t]
    # pairs whose counts differ by 2 mod 4 at an occupied island have an
    # odd linking number there and vanish, so group by counts mod 4 over
    # the occupied columns and only pair within groups
    occupied_cols = np.flatnonzero(mwin > 0)
    extra = arrs.island_counts[:, occupied_cols] % 4 if occupied_cols.size else None
    counts = arrs.island_counts.astype(np.int64)
    signs = 1 - 2 * arrs.sign_parity.astype(np.int64)
    odd_m = {base + k for k in range(2 * t) if mwin[k] % 2}
    scale = 2.0**-t
    p = np.zeros(geometry.n)
    for members in _class_groups(arrs, extra):
        endpoint = int(arrs.endpoints[members[0]])
        p[endpoint - 1] += len(members) * scale  # diagonal pairs: trY = 1
        if len(members) < 2:
            continue
        hists = [tuple(map(int, arrs.bits[i])) for i in members]
        crossed = [crossed_islands(h, s0) for h in hists]
        for ai in range(len(members)):
            ca = counts[members[ai]]
            for bi in range(ai + 1, len(members)):
                # within a group every occupied-island linking number is even
                link = (ca - counts[members[bi]]) >> 1
                phase_exp = int(((link >> 1) * mwin * mwin).sum()) % 4
                if phase_exp % 2:
                    continue  # the reversed pair cancels the imaginary part
                terms = _pair_tau_terms(crossed[ai], crossed[bi], odd_m)
                value = 1.0 if phase_exp == 0 else -1.0
                if len(terms) % 2:
                    value = -value
                p[endpoint - 1] += 2.0 * signs[members[ai]] * signs[members[bi]] * value * scale
    return SpatialDistribution(
        sites=np.arange(1, geometry.n + 1),
        p=p,
        meta={"method": "ising-fixed", "t": t},
    )


def ising_averaged_distribution(
    geometry: WalkGeometry,
    guard: int = ISING_ENUM_GUARD,
) -> SpatialDistribution:
    """Exact full-period disorder average of the Ising walk.

    Every island is occupied under the full-period model, so pairs in
    different mod-4 traversal-count classes have an odd linking number
    somewhere and drop out.  Pairs within a class carry the parity-
    conditioned Z4 Gauss-sum weight of :func:`averaged_pair_trace`: the
    quarter phases of islands with l_s != 0 mod 8 enter as linear
    coefficients, tau couplings as quadratic terms.  The reversed pair
    conjugates the weight, so ordered pairs contribute twice its real
    part, and every contribution is a dyadic rational.
    """
    t, s0 = geometry.t, geometry.s0
    _check_ising_guard(t, guard)
    arrs = history_arrays(t, s0)
    counts = arrs.island_counts.astype(np.int64)
    signs = 1 - 2 * arrs.sign_parity.astype(np.int64)
    base = arrs.island_base
    scale = 2.0**-t
    p = np.zeros(geometry.n)
    for members in _class_groups(arrs, arrs.island_counts % 4):
        endpoint = int(arrs.endpoints[members[0]])
        p[endpoint - 1] += len(members) * scale
        if len(members) < 2:
            continue
        hists = [tuple(map(int, arrs.bits[i])) for i in members]
        crossed = [crossed_islands(h, s0) for h in hists]
        for ai in range(len(members)):
            ca = counts[members[ai]]
            for bi in range(ai + 1, len(members)):
                link = (ca - counts[members[bi]]) >> 1  # even within a class
                qcols = np.flatnonzero((link >> 1) % 4)  # islands with l != 0 mod 8
                terms = _pair_tau_terms(crossed[ai], crossed[bi])
                if not terms and qcols.size == 0:
                    coeff = 1.0
                else:
                    involved = sorted(
                        {int(base + k) for k in qcols} | {s for term in terms for s in term}
                    )
                    index = {s: k for k, s in enumerate(involved)}
                    linear = [0] * len(involved)
                    for k in qcols:
                        linear[index[int(base + k)]] = int((-(link[k] >> 1)) % 4)
                    s_val = z4_gauss_sum(
                        len(involved),
                        linear,
                        [(index[sa], index[sb]) for sa, sb in terms],
                    )
                    coeff = s_val.real / float(2 ** len(involved))
                p[endpoint - 1] += (
                    2.0 * signs[members[ai]] * signs[members[bi]] * coeff * scale
                )
    return SpatialDistribution(
        sites=np.arange(1, geometry.n + 1),
        p=p,
        meta={"method": "ising-averaged", "t": t},
    )


def ising_mc_distribution(
    geometry: WalkGeometry,
    occupation: OccupationModel | None = None,
    samples: int = 200,
    seed: int = 0,
    workers: int | None = None,
    guard: int = ISING_ENUM_GUARD,
) -> SpatialDistribution:
    """Monte Carlo disorder average of the fixed-configuration engine.

    Same counter-based per-realization streams as the Abelian Monte Carlo,
    so output is byte-identical across worker counts.
    """
    occupation = occupation if occupation is not None else OccupationModel.full_period(4)
    if samples < 2:
        raise ValueError("need at least 2 samples for error bars")
    _check_ising_guard(geometry.t, guard)
    workers = resolve_workers(workers)
    n = geometry.n

    def run_chunk(start: int, stop: int):
        sum_p = np.zeros(n)
        sum_p2 = np.zeros(n)
        for index in range(start, stop):
            rng = sample_rng(seed, index)
            config = IslandConfig(tuple(int(v) for v in occupation.sample(rng, n)))
            p = ising_fixed_distribution(config, geometry, guard=guard).p
            sum_p += p
            sum_p2 += p * p
        return sum_p, sum_p2

    bounds = [(lo, min(lo + MC_CHUNK, samples)) for lo in range(0, samples, MC_CHUNK)]
    if workers == 1:
        chunk_results = [run_chunk(lo, hi) for lo, hi in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunk_results = list(pool.map(lambda b: run_chunk(*b), bounds))
    sum_p = np.zeros(n)
    sum_p2 = np.zeros(n)
    for cp, cp2 in chunk_results:
        sum_p += cp
        sum_p2 += cp2
    mean_p = sum_p / samples
    spread = np.maximum(sum_p2 / samples - mean_p**2, 0.0)
    return SpatialDistribution(
        sites=np.arange(1, n + 1),
        p=mean_p,
        stderr=np.sqrt(spread / (samples - 1)),
        meta={"method": "ising-mc", "t": geometry.t, "samples": samples, "seed": seed},
    )


def ising_variance_series(
    geometry: WalkGeometry,
    guard: int = ISING_ENUM_GUARD,
) -> TimeSeries:
    """Exact averaged position variance sigma^2(k) for k = 0..t."""
    from .fitting import variance

    values = [0.0]
    for k in range(1, geometry.t + 1):
        sub = WalkGeometry(n=geometry.n, t=k, s0=geometry.s0)
        values.append(variance(ising_averaged_distribution(sub, guard=guard)))
    return TimeSeries(
        times=np.arange(geometry.t + 1),
        values=np.asarray(values),
        meta={"quantity": "position-variance", "method": "ising-averaged"},
    )


@dataclass(frozen=True, eq=False)
class FusionSignTable:
    """Fusion signs x = (-1)^tau for pairs returning to the origin.

    One row per unordered admissible pair of t-step histories ending at
    s0 (diagonal included); ``weights`` is the ordered-pair multiplicity
    (1 on the diagonal, 2 off it).  ``signs[k]`` holds the sign of each
    pair word truncated to its first k steps, for uniform filling m = 1
    where the trace sign is (-1)^(sum of all tau).
    """

    t: int
    truncations: tuple[int, ...]
    weights: np.ndarray
    signs: Mapping[int, np.ndarray]

    @property
    def pair_count(self) -> float:
        return float(self.weights.sum())

    def mean_sign(self, k: int) -> float:
        return float((self.weights * self.signs[k]).sum() / self.weights.sum())


def fusion_sign_table(
    t: int,
    truncations: Iterable[int] | None = None,
    guard: int = CORRELATOR_GUARD,
) -> FusionSignTable:
    """Tabulate truncated fusion signs for all origin-returning pairs."""
    if t < 2:
        raise ValueError("need t >= 2 for origin-returning pairs")
    if t % 2:
        raise ValueError(f"no history returns to the origin in odd t = {t}")
    if t > guard or guard > ISING_ENUM_MAX:
        raise GuardLimitError(f"correlator enumeration limited to t <= {min(guard, ISING_ENUM_MAX)}")
    s0 = t + 1
    ks = tuple(sorted(set(truncations if truncations is not None else range(t + 1))))
    if any(k < 0 or k > t for k in ks):
        raise ValueError("truncations must lie in 0..t")
    arrs = history_arrays(t, s0)
    origin = np.flatnonzero(arrs.endpoints == s0)
    weights: list[float] = []
    parity_cols: dict[int, list[int]] = {k: [] for k in ks}
    for lastbit in (0, 1):
        members = origin[arrs.last_bits[origin] == lastbit]
        hists = [tuple(map(int, arrs.bits[i])) for i in members]
        crossed = [crossed_islands(h, s0) for h in hists]
        for ai in range(len(members)):
            for bi in range(ai, len(members)):
                weights.append(1.0 if ai == bi else 2.0)
                parities = _truncated_tau_parities(crossed[ai], crossed[bi], ks)
                for k in ks:
                    parity_cols[k].append(parities[k])
    weights_arr = np.asarray(weights)
    signs = {
        k: (1 - 2 * np.asarray(cols, dtype=np.int8)).astype(np.int8)
        for k, cols in parity_cols.items()
    }
    return FusionSignTable(t=t, truncations=ks, weights=weights_arr, signs=signs)


def _truncated_tau_parities(fwd_isl, bwd_isl, ks) -> dict[int, int]:
    """Total tau parity of the pair word truncated to each k in ks."""
    counts: dict[int, int] = {}
    for isl in fwd_isl:
        counts[isl] = counts.get(isl, 0) + 1
    for isl in bwd_isl:
        counts[isl] = counts.get(isl, 0) + 1
    islands = sorted(s for s, c in counts.items() if c >= 2)
    parities = {k: 0 for k in ks}
    for i, sa in enumerate(islands):
        for sb in islands[i + 1 :]:
            fsteps = [k for k, s in enumerate(fwd_isl) if s == sa or s == sb]
            bsteps = [k for k, s in enumerate(bwd_isl) if s == sa or s == sb]
            fcodes = tuple(1 if fwd_isl[k] == sa else 2 for k in fsteps)
            bcodes = tuple(1 if bwd_isl[k] == sa else 2 for k in bsteps)
            cache: dict[tuple[int, int], int] = {}
            for k in ks:
                cut = (bisect.bisect_left(fsteps, k), bisect.bisect_left(bsteps, k))
                tau = cache.get(cut)
                if tau is None:
                    tau = tau_from_events(fcodes[: cut[0]], bcodes[: cut[1]])
                    cache[cut] = tau
                parities[k] ^= tau
    return parities


@dataclass(frozen=True, eq=False)
class CorrelatorResult:
    """Temporal autocorrelation of the fusion sign."""

    t: int
    tprimes: np.ndarray
    values: np.ndarray
    mean_sign: float
    pair_count: float


def correlator(
    t: int,
    tprimes: Iterable[int] | None = None,
    guard: int = CORRELATOR_GUARD,
) -> CorrelatorResult:
    """C(t, t') = (<x y> - <x><y>) / (1 - <x>^2) over origin-returning pairs.

    x is the fusion sign of the full t-step pair word, y that of the word
    truncated t' steps earlier.  C(t, 0) = 1 identically; C(t, 1) = 1
    because the shared final step of an admissible pair cancels from the
    braid word.

    Raises:
        DegenerateNormalizationError: all pair words share one fusion sign
            (happens for t <= 4, where tau never reaches 1), so the
            normalization 1 - <x>^2 vanishes.
    """
    tps = np.asarray(sorted(set(tprimes if tprimes is not None else range(t + 1))), dtype=np.int64)
    if tps.size and (tps.min() < 0 or tps.max() > t):
        raise ValueError("tprimes must lie in 0..t")
    ks = {t - int(tp) for tp in tps} | {t}
    table = fusion_sign_table(t, ks, guard=guard)
    w = table.weights
    count = float(w.sum())
    x = table.signs[t].astype(np.float64)
    mean_x = float((w * x).sum() / count)
    denom = 1.0 - mean_x * mean_x
    if denom < DEGENERATE_TOL:
        raise DegenerateNormalizationError(
            f"fusion sign variance vanishes at t = {t} (mean sign {mean_x}); "
            "the correlator is undefined there"
        )
    values = np.empty(tps.size)
    for i, tp in enumerate(tps):
        y = table.signs[t - int(tp)].astype(np.float64)
        mean_y = float((w * y).sum() / count)
        mean_xy = float((w * x * y).sum() / count)
        values[i] = (mean_xy - mean_x * mean_y) / denom
    return CorrelatorResult(
        t=t, tprimes=tps, values=values, mean_sign=mean_x, pair_count=count
    )
