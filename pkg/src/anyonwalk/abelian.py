"""Abelian anyonic walks over random island backgrounds.

A walker hopping on sites 1..n picks up the pure phase e^(i phi m_s) each
time it crosses island s holding m_s anyons, with phi = sign*pi/N set by
the exchange statistics.  Three independent routes to the site
distribution are implemented:

* ``statevec_distribution`` -- direct unitary evolution of the coin-position
  state, the production engine (batched over disorder realizations);
* ``pathsum_distribution`` -- the defining double sum over pairs of coin
  histories, kept in pair form as a cross-check oracle (its imaginary
  residue must vanish; a breach aborts the run);
* ``averaged_distribution_exact`` -- the closed-form disorder average for
  uniform full-period occupations, where averaging the pair phase
  e^(i phi m (c_a - c_a')) kills every pair whose traversal-count vectors
  differ mod 2N, leaving a sum of squared class amplitudes.

Monte Carlo averaging (``averaged_distribution_mc``) draws one counter-based
random stream per disorder realization, so results are byte-identical for a
given master seed no matter how many worker threads share the batch.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .disorder import OccupationModel
from .dists import SpatialDistribution, TimeSeries
from .errors import GuardLimitError, NumericalInvariantError
from .paths import IslandConfig, WalkGeometry

__all__ = [
    "AbelianStatistics",
    "AveragedWalkResult",
    "HistoryArrays",
    "abelian_trace",
    "history_arrays",
    "sample_rng",
    "resolve_workers",
    "statevec_distribution",
    "disorder_free_distribution",
    "pathsum_distribution",
    "averaged_distribution_exact",
    "averaged_distribution_mc",
    "temporal_noise_walk",
]

PATHSUM_GUARD = 14
IMAG_RESIDUE_ABORT = 1e-9
MC_CHUNK = 64
_OUTER_BLOCK = 512

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class AbelianStatistics:
    """Exchange statistics e^(i sign pi / order) per anyon crossed."""

    order: int
    sign: int = 1

    def __post_init__(self) -> None:
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")

    @property
    def phase_per_anyon(self) -> float:
        return self.sign * math.pi / self.order


@dataclass(frozen=True, eq=False)
class HistoryArrays:
    """Vectorized tables over all 2^t coin histories (lexicographic rows)."""

    t: int
    s0: int
    bits: np.ndarray  # (2^t, t) uint8, column k = step k+1
    endpoints: np.ndarray  # (2^t,) final site label
    last_bits: np.ndarray  # (2^t,) uint8
    sign_parity: np.ndarray  # (2^t,) uint8, parity of sum a_k a_(k+1)
    island_counts: np.ndarray  # (2^t, 2t) uint8 traversal counts
    island_base: int  # island label of count column 0 (= s0 - t)


@lru_cache(maxsize=8)
def history_arrays(t: int, s0: int) -> HistoryArrays:
    if t < 1:
        raise ValueError("t must be >= 1")
    m = 1 << t
    idx = np.arange(m, dtype=np.int64)
    bits = np.empty((m, t), dtype=np.uint8)
    for k in range(t):
        bits[:, k] = (idx >> (t - 1 - k)) & 1
    steps = bits.astype(np.int64) * 2 - 1
    endpoints = s0 + steps.sum(axis=1)
    last_bits = bits[:, -1].copy()
    if t >= 2:
        sign_parity = (bits[:, :-1] & bits[:, 1:]).sum(axis=1).astype(np.uint8) & 1
    else:
        sign_parity = np.zeros(m, dtype=np.uint8)
    pos_before = s0 + np.concatenate(
        [np.zeros((m, 1), dtype=np.int64), steps.cumsum(axis=1)[:, :-1]], axis=1
    )
    island_base = s0 - t
    crossed = pos_before - 1 + bits - island_base  # column index of crossed island
    counts = np.zeros((m, 2 * t), dtype=np.uint8)
    np.add.at(counts, (np.arange(m)[:, None], crossed), 1)
    for arr in (bits, endpoints, last_bits, sign_parity, counts):
        arr.setflags(write=False)
    return HistoryArrays(t, s0, bits, endpoints, last_bits, sign_parity, counts, island_base)


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one disorder realization."""
    if not 0 <= seed < 2**63:
        raise ValueError("seed must satisfy 0 <= seed < 2**63")
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("ANYONWALK_WORKERS", "1"))
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return workers


def _phase_right(occupations: np.ndarray, stats: AbelianStatistics) -> np.ndarray:
    """Phase for a rightward crossing; column i belongs to island label i+1."""
    return np.exp(1j * stats.phase_per_anyon * occupations)


def abelian_trace(profile, config: IslandConfig, stats: AbelianStatistics) -> complex:
    """Fusion trace of an Abelian pair word: prod_s e^(i sign 2 pi m_s l_s / N).

    Windings of the walker around island s contribute twice the crossing
    phase per unit of linking, hence the 2 pi / N per (m, l) unit.  Always
    unit modulus; the engines apply the same phase crossing by crossing.
    """
    total = sum(config.occupation(s) * l for s, l in profile.links.items())
    return complex(np.exp(2j * stats.phase_per_anyon * total))


def _evolve_batch(
    phase_right: np.ndarray,
    geometry: WalkGeometry,
    flips: np.ndarray | None = None,
    flip_columns: np.ndarray | None = None,
    record_variance: bool = False,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Run t steps for a batch of disorder realizations.

    ``flips`` holds per-step boolean sign flips for the island columns in
    ``flip_columns`` (temporal noise); the flipped phase applies to both
    crossing directions of the affected island at that step.
    """
    batch, n = phase_right.shape
    t, s0 = geometry.t, geometry.s0
    psi0 = np.zeros((batch, n), dtype=np.complex128)
    psi1 = np.zeros((batch, n), dtype=np.complex128)
    psi0[:, s0 - 1] = 1.0
    phase_left = np.roll(phase_right, 1, axis=-1)
    sites = np.arange(1, n + 1, dtype=np.float64)
    variance = np.zeros((batch, t + 1)) if record_variance else None
    for k in range(t):
        c0 = (psi0 + psi1) * _INV_SQRT2
        c1 = (psi0 - psi1) * _INV_SQRT2
        if flips is None:
            pr, pl = phase_right, phase_left
        else:
            signs = np.ones((batch, n))
            signs[:, flip_columns] = np.where(flips[:, k, :], -1.0, 1.0)
            pr = phase_right * signs
            pl = phase_left * np.roll(signs, 1, axis=-1)
        psi0 = np.roll(c0 * pl, -1, axis=-1)
        psi1 = np.roll(c1 * pr, 1, axis=-1)
        if record_variance:
            p = psi0.real**2 + psi0.imag**2 + psi1.real**2 + psi1.imag**2
            m1 = (p * sites).sum(axis=-1)
            m2 = (p * sites**2).sum(axis=-1)
            variance[:, k + 1] = m2 - m1**2
    p = psi0.real**2 + psi0.imag**2 + psi1.real**2 + psi1.imag**2
    return p, variance


def statevec_distribution(
    config: IslandConfig,
    stats: AbelianStatistics,
    geometry: WalkGeometry,
    return_series: bool = False,
):
    """Unitary evolution for one fixed island configuration."""
    if config.n != geometry.n:
        raise ValueError("config size does not match geometry")
    occ = np.asarray(config.occupations, dtype=np.float64)[None, :]
    p, var = _evolve_batch(
        _phase_right(occ, stats), geometry, record_variance=return_series
    )
    dist = SpatialDistribution(
        sites=np.arange(1, geometry.n + 1),
        p=p[0],
        meta={"method": "statevec", "t": geometry.t, "order": stats.order},
    )
    if not return_series:
        return dist
    series = TimeSeries(
        times=np.arange(geometry.t + 1),
        values=var[0],
        meta={"quantity": "position-variance"},
    )
    return dist, series


def disorder_free_distribution(geometry: WalkGeometry, return_series: bool = False):
    """Plain Hadamard walk: every island empty."""
    config = IslandConfig((0,) * geometry.n)
    return statevec_distribution(config, AbelianStatistics(1), geometry, return_series)


def _pair_sum(weights: np.ndarray) -> complex:
    """Sum of w_a * conj(w_a') over all ordered pairs, in blocks."""
    conj = weights.conj()
    total = 0.0 + 0.0j
    for lo in range(0, weights.size, _OUTER_BLOCK):
        block = weights[lo : lo + _OUTER_BLOCK]
        total += complex(np.sum(block[:, None] * conj[None, :]))
    return total


def pathsum_distribution(
    config: IslandConfig,
    stats: AbelianStatistics,
    geometry: WalkGeometry,
    guard: int = PATHSUM_GUARD,
) -> SpatialDistribution:
    """Defining pair sum over coin histories (cross-check oracle).

    Admissible pairs share endpoint and final coin bit, which is exactly a
    grouping of histories; the pair weight 2^(-t) (-1)^(z+z') u_a u_a'* is
    accumulated pairwise so the imaginary residue remains an honest
    consistency signal.
    """
    if config.n != geometry.n:
        raise ValueError("config size does not match geometry")
    t = geometry.t
    if t > guard:
        raise GuardLimitError(f"path sum limited to t <= {guard}, got {t}")
    arrs = history_arrays(t, geometry.s0)
    occ = np.asarray(config.occupations, dtype=np.float64)
    window = occ[arrs.island_base - 1 : arrs.island_base - 1 + 2 * t]
    u = np.exp(
        1j * stats.phase_per_anyon * (arrs.island_counts.astype(np.float64) @ window)
    )
    w = np.where(arrs.sign_parity, -1.0, 1.0) * u
    p = np.zeros(geometry.n)
    worst_imag = 0.0
    group_key = arrs.endpoints * 2 + arrs.last_bits
    order = np.argsort(group_key, kind="stable")
    sorted_keys = group_key[order]
    boundaries = np.flatnonzero(np.diff(sorted_keys)) + 1
    scale = 2.0**-t
    for sel in np.split(order, boundaries):
        total = _pair_sum(w[sel]) * scale
        worst_imag = max(worst_imag, abs(total.imag))
        endpoint = int(arrs.endpoints[sel[0]])
        p[endpoint - 1] += total.real
    if worst_imag > IMAG_RESIDUE_ABORT:
        raise NumericalInvariantError(
            f"path sum imaginary residue {worst_imag:.3e}",
            diagnostics={"worst_imag": worst_imag, "t": t, "order": stats.order},
        )
    return SpatialDistribution(
        sites=np.arange(1, geometry.n + 1),
        p=p,
        meta={"method": "pathsum", "t": t, "imag_residue": worst_imag},
    )


def averaged_distribution_exact(
    stats: AbelianStatistics,
    geometry: WalkGeometry,
    occupation: OccupationModel | None = None,
    guard: int = PATHSUM_GUARD,
) -> SpatialDistribution:
    """Exact disorder average for uniform full-period occupations.

    Only pairs whose per-island traversal counts agree mod 2N survive the
    average, so p(s) = 2^(-t) * sum over classes of (sum of coin signs)^2,
    manifestly non-negative.
    """
    occupation = occupation if occupation is not None else OccupationModel.full_period(stats.order)
    if not occupation.full_period_modulus(stats.order):
        raise ValueError(
            "exact average requires a uniform occupation over a complete "
            "residue system mod N; use Monte Carlo for other ensembles"
        )
    t = geometry.t
    if t > guard:
        raise GuardLimitError(f"exact average limited to t <= {guard}, got {t}")
    arrs = history_arrays(t, geometry.s0)
    modulus = 2 * stats.order
    key = np.column_stack(
        [
            arrs.endpoints,
            arrs.last_bits.astype(np.int64),
            (arrs.island_counts % modulus).astype(np.int64),
        ]
    )
    classes, inverse = np.unique(key, axis=0, return_inverse=True)
    signs = 1.0 - 2.0 * arrs.sign_parity
    class_sums = np.bincount(inverse, weights=signs, minlength=classes.shape[0])
    p = np.zeros(geometry.n)
    np.add.at(p, classes[:, 0] - 1, class_sums**2 * 2.0**-t)
    return SpatialDistribution(
        sites=np.arange(1, geometry.n + 1),
        p=p,
        meta={"method": "exact-average", "t": t, "order": stats.order, "classes": int(classes.shape[0])},
    )


@dataclass(frozen=True, eq=False)
class AveragedWalkResult:
    """Monte Carlo disorder average with growth diagnostics."""

    distribution: SpatialDistribution
    variance: TimeSeries
    samples: int
    seed: int


def _mc_driver(
    stats: AbelianStatistics,
    geometry: WalkGeometry,
    occupation: OccupationModel,
    samples: int,
    seed: int,
    workers: int | None,
    p_flip: float,
    noise_region: tuple[int, int] | None,
    method_label: str,
) -> AveragedWalkResult:
    if samples < 1:
        raise ValueError("need at least 1 sample")
    if not 0.0 <= p_flip <= 1.0:
        raise ValueError("p_flip must lie in [0, 1]")
    workers = resolve_workers(workers)
    n, t = geometry.n, geometry.t
    if p_flip > 0.0:
        lo, hi = noise_region if noise_region is not None else (1, n)
        if not (1 <= lo <= hi <= n):
            raise ValueError(f"noise region ({lo}, {hi}) outside 1..{n}")
        flip_columns = np.arange(lo - 1, hi)
    else:
        flip_columns = None

    def run_chunk(start: int, stop: int):
        batch = stop - start
        occ = np.empty((batch, n), dtype=np.float64)
        flips = (
            np.empty((batch, t, flip_columns.size), dtype=bool)
            if flip_columns is not None
            else None
        )
        # Per-realization draw order is fixed: occupations first, then the
        # full temporal flip table, all from that realization's own stream.
        for row, index in enumerate(range(start, stop)):
            rng = sample_rng(seed, index)
            occ[row] = occupation.sample(rng, n)
            if flips is not None:
                flips[row] = rng.random((t, flip_columns.size)) < p_flip
        p, var = _evolve_batch(
            _phase_right(occ, stats),
            geometry,
            flips=flips,
            flip_columns=flip_columns,
            record_variance=True,
        )
        with np.errstate(divide="ignore"):
            ln_p = np.log(p)
        return (
            p.sum(axis=0),
            (p * p).sum(axis=0),
            ln_p.sum(axis=0),
            var.sum(axis=0),
            (var * var).sum(axis=0),
        )

    bounds = [(lo, min(lo + MC_CHUNK, samples)) for lo in range(0, samples, MC_CHUNK)]
    if workers == 1:
        chunk_results = [run_chunk(lo, hi) for lo, hi in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunk_results = list(pool.map(lambda b: run_chunk(*b), bounds))
    sum_p = np.zeros(n)
    sum_p2 = np.zeros(n)
    sum_ln = np.zeros(n)
    sum_var = np.zeros(t + 1)
    sum_var2 = np.zeros(t + 1)
    for cp, cp2, cln, cv, cv2 in chunk_results:  # fixed reduction order
        sum_p += cp
        sum_p2 += cp2
        sum_ln += cln
        sum_var += cv
        sum_var2 += cv2
    mean_p = sum_p / samples
    err_denom = max(samples - 1, 1)  # samples=1: spread is 0, stderr 0
    var_p = np.maximum(sum_p2 / samples - mean_p**2, 0.0)
    stderr_p = np.sqrt(var_p / err_denom)
    mean_var = sum_var / samples
    spread = np.maximum(sum_var2 / samples - mean_var**2, 0.0)
    stderr_var = np.sqrt(spread / err_denom)
    meta = {
        "method": method_label,
        "t": t,
        "order": stats.order,
        "samples": samples,
        "seed": seed,
        "p_flip": p_flip,
    }
    dist = SpatialDistribution(
        sites=np.arange(1, n + 1),
        p=mean_p,
        stderr=stderr_p,
        mean_ln_p=sum_ln / samples,
        meta=meta,
    )
    series = TimeSeries(
        times=np.arange(t + 1),
        values=mean_var,
        stderr=stderr_var,
        meta={"quantity": "position-variance", **meta},
    )
    return AveragedWalkResult(dist, series, samples, seed)


def averaged_distribution_mc(
    stats: AbelianStatistics,
    geometry: WalkGeometry,
    occupation: OccupationModel | None = None,
    samples: int = 500,
    seed: int = 0,
    workers: int | None = None,
) -> AveragedWalkResult:
    """Monte Carlo disorder average over island occupations."""
    occupation = occupation if occupation is not None else OccupationModel.full_period(stats.order)
    return _mc_driver(
        stats, geometry, occupation, samples, seed, workers, 0.0, None, "mc-average"
    )


def temporal_noise_walk(
    stats: AbelianStatistics,
    geometry: WalkGeometry,
    p_flip: float,
    occupation: OccupationModel | None = None,
    noise_region: tuple[int, int] | None = None,
    samples: int = 500,
    seed: int = 0,
    workers: int | None = None,
) -> AveragedWalkResult:
    """Disorder average with per-step, per-island random sign flips.

    Each step, every island in the region independently flips the sign of
    its crossing phase with probability ``p_flip`` (a global flip would be
    pure gauge; per-island flips dephase the walk and restore diffusive
    variance growth).
    """
    occupation = occupation if occupation is not None else OccupationModel.full_period(stats.order)
    return _mc_driver(
        stats,
        geometry,
        occupation,
        samples,
        seed,
        workers,
        p_flip,
        noise_region,
        "mc-temporal",
    )
