"""One-dimensional multiple-scattering model of walk localization.

The averaged anyonic walk behaves like a plane wave crossing a chain of
identical elastic scatterers separated by random propagation phases.  Each
scatterer carries reflection/transmission amplitudes (r, t from the left;
rp, tp from the right), and the phase accumulated between scatterers is
drawn uniformly from the discrete set {pi m / N : m = 0..N-1}, the set of
exchange phases an order-N abelian walker can pick up.

Composing one scatterer at a time sums the full multiple-reflection
(Fabry-Perot) series in closed form,

    t_{1,n}  = t_{1,n-1} e^(i theta) t_n / (1 - r_n rp_{1,n-1} e^(2i theta)),
    rp_{1,n} = rp_n + t_n tp_n rp_{1,n-1} e^(2i theta)
                   / (1 - r_n rp_{1,n-1} e^(2i theta)),

and the discrete-phase average of ln|t_{1,n}|^2 telescopes: e^(2i theta)
ranges over the N-th roots of unity, so the interference denominator
averages through the cyclotomic identity prod_m (1 - C e^(2 pi i m/N)) =
1 - C^N to the exact value (1/N) ln|1 - C^N|^2 with C = r_n rp_{1,n-1}.
Bounding |1 - C^N| between 1 - |r|^N and 1 + |r|^N then brackets the
localization length xi (defined through <ln|t_{1,n}|^2> ~ -n/xi) between
two closed-form values.  For the balanced coin both bounds pinch to
1/ln 2 ~= 1.443 as N grows, while for N <= 2 the required condition
|t|^N + |r|^N < 1 fails (N = 2 is the semion point) and the bounds decide
nothing.  ``mc_localization_length`` estimates xi directly by Monte Carlo
over phase chains, one counter-based random stream per chain so results
are byte-identical for a given seed regardless of worker count.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .abelian import resolve_workers, sample_rng
from .errors import BoundsInapplicableError, NumericalInvariantError

__all__ = [
    "Scatterer",
    "BlockAmplitudes",
    "PhaseEnsemble",
    "LocalizationEstimate",
    "compose_block",
    "cyclotomic_product",
    "cyclotomic_average",
    "xi_bounds",
    "mc_localization_length",
]

UNITARITY_TOL = 1e-12
SCATTER_CHUNK = 256


@dataclass(frozen=True)
class Scatterer:
    """Amplitudes of one elastic scatterer.

    ``r``/``t`` act on waves incident from the left, ``rp``/``tp`` on waves
    incident from the right; the scattering matrix is ``[[r, tp], [t, rp]]``.
    """

    r: complex
    t: complex
    rp: complex
    tp: complex

    def matrix(self) -> np.ndarray:
        return np.array([[self.r, self.tp], [self.t, self.rp]], dtype=np.complex128)

    def check_unitarity(self, tol: float = UNITARITY_TOL) -> None:
        """Raise unless the scattering matrix is unitary within ``tol``."""
        s = self.matrix()
        defect = float(np.abs(s.conj().T @ s - np.eye(2)).max())
        if defect > tol:
            raise NumericalInvariantError(
                f"scatterer is not unitary (defect {defect:.3e})",
                diagnostics={"defect": defect},
            )

    @classmethod
    def balanced_coin(cls) -> "Scatterer":
        """The walk's balanced coin: t = -1/sqrt(2), tp = 1/sqrt(2), r = rp = 1/sqrt(2)."""
        h = 1.0 / math.sqrt(2.0)
        return cls(r=h, t=-h, rp=h, tp=h)


@dataclass(frozen=True)
class BlockAmplitudes:
    """Transmission and right-reflection amplitude of a composed block."""

    t: complex
    rp: complex

    @classmethod
    def from_scatterer(cls, scatterer: Scatterer) -> "BlockAmplitudes":
        """Base case: the block holding a single scatterer."""
        return cls(t=scatterer.t, rp=scatterer.rp)


@dataclass(frozen=True)
class PhaseEnsemble:
    """Inter-scatterer phase distribution: uniform over {pi m / N}.

    ``continuous=True`` switches to the uniform distribution on [0, pi),
    kept only as a comparison knob (the N -> infinity limit).
    """

    N: int
    continuous: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise ValueError(f"ensemble order N must be an integer >= 1, got {self.N!r}")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.continuous:
            return rng.uniform(0.0, math.pi, size=size)
        return rng.integers(0, self.N, size=size) * (math.pi / self.N)


def compose_block(block: BlockAmplitudes, theta: float, nxt: Scatterer) -> BlockAmplitudes:
    """Append one scatterer, a phase ``theta`` to its left, to a block.

    Sums the geometric multiple-reflection series between the old block and
    the new scatterer; requires |r_n rp_{1,n-1}| < 1 so the series
    converges (automatic for unitary scatterers with |r| < 1).
    """
    loop = nxt.r * block.rp * cmath.exp(2j * theta)
    if abs(loop) >= 1.0:
        raise ValueError(
            f"multiple-reflection series diverges: |r_n * rp_block| = {abs(loop):.6f} >= 1"
        )
    denom = 1.0 - loop
    t_new = block.t * cmath.exp(1j * theta) * nxt.t / denom
    rp_new = nxt.rp + nxt.t * nxt.tp * block.rp * cmath.exp(2j * theta) / denom
    if abs(t_new) > 1.0 + 1e-9:
        raise NumericalInvariantError(
            f"composed transmission exceeds unity: |t| = {abs(t_new):.6f}",
            diagnostics={"abs_t": abs(t_new)},
        )
    return BlockAmplitudes(t=t_new, rp=rp_new)


def cyclotomic_product(C: complex, N: int) -> complex:
    """Direct product prod_{m=1}^{N} (1 - C e^(2 pi i m / N)).

    Exposed separately so the identity with ``1 - C**N`` is testable.
    """
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ValueError(f"N must be an integer >= 1, got {N!r}")
    out = 1.0 + 0j
    for m in range(1, N + 1):
        out *= 1.0 - C * cmath.exp(2j * math.pi * m / N)
    return out


def cyclotomic_average(C: complex, N: int) -> float:
    """Average of ln|1 - C e^(2i theta)|^2 over theta in {pi m / N}.

    By the cyclotomic product identity this equals (1/N) ln|1 - C^N|^2
    exactly.  Requires |C| <= 1; returns -inf in the degenerate case
    C^N = 1 (only reachable on the unit circle).
    """
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ValueError(f"N must be an integer >= 1, got {N!r}")
    if abs(C) > 1.0 + 1e-12:
        raise ValueError(f"|C| = {abs(C):.6f} > 1")
    mag = abs(1.0 - C**N)
    if mag == 0.0:
        return -math.inf
    return 2.0 * math.log(mag) / N


def xi_bounds(t_abs: float, r_abs: float, N: int) -> tuple[float, float]:
    """Two-sided bounds on the localization length.

    Bounding the phase-averaged interference correction
    (1/N) ln|1 - C^N|^2 by +-(2/N) ln(1 -+ |r|^N) gives

        1 / ((2/N) ln(1 + |r|^N) - ln|t|^2)  <=  xi
        xi  <=  1 / ((2/N) ln(1 - |r|^N) - ln|t|^2).

    Valid only while |t|^N + |r|^N < 1 (otherwise the upper bound's
    denominator is not positive and nothing is decided); for the balanced
    coin that means N > 2, with N = 2 the semion point left undecided.
    """
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ValueError(f"N must be an integer >= 1, got {N!r}")
    if not (0.0 < t_abs <= 1.0 and 0.0 <= r_abs <= 1.0):
        raise ValueError(f"amplitude magnitudes out of range: |t|={t_abs}, |r|={r_abs}")
    rn = r_abs**N
    # The semion point |t|^2 = |r|^2 = 1/2, N = 2 sits exactly on the
    # boundary; the tolerance keeps it inapplicable despite rounding.
    if t_abs**N + rn >= 1.0 - 1e-12:
        detail = " (N = 2 corresponds to semions)" if N == 2 else ""
        raise BoundsInapplicableError(
            f"bounds require |t|^N + |r|^N < 1; got {t_abs ** N + rn:.6f} "
            f"for N = {N}{detail}: localization undecided by bounds"
        )
    decay = -2.0 * math.log(t_abs)  # -ln|t|^2 > 0
    lower = 1.0 / ((2.0 / N) * math.log1p(rn) + decay)
    upper = 1.0 / ((2.0 / N) * math.log1p(-rn) + decay)
    return lower, upper


@dataclass(frozen=True)
class LocalizationEstimate:
    """Monte Carlo localization-length estimate for one phase ensemble.

    ``lengths``/``mean_ln_t2``/``stderr_ln_t2`` hold the chain-length
    profile of <ln|t_{1,n}|^2>; ``slope`` is the mean per-chain regression
    slope past the burn-in window and ``xi_hat = -1/slope``.
    """

    N: int
    n_max: int
    samples: int
    burn_in: int
    seed: int
    slope: float
    slope_stderr: float
    xi_hat: float
    xi_stderr: float
    lengths: np.ndarray
    mean_ln_t2: np.ndarray
    stderr_ln_t2: np.ndarray
    meta: Mapping[str, Any] = field(default_factory=dict)


def _chain_ln_t2(scatterer: Scatterer, thetas: np.ndarray) -> np.ndarray:
    """ln|t_{1,n}|^2 for a batch of phase chains, n = 1..n_max.

    ``thetas`` has shape (batch, n_max - 1); the composition itself is the
    vectorized form of :func:`compose_block`.
    """
    batch, gaps = thetas.shape
    out = np.empty((batch, gaps + 1), dtype=np.float64)
    t_cur = np.full(batch, scatterer.t, dtype=np.complex128)
    rp_cur = np.full(batch, scatterer.rp, dtype=np.complex128)
    out[:, 0] = np.log(np.abs(t_cur) ** 2)
    for k in range(gaps):
        e1 = np.exp(1j * thetas[:, k])
        e2 = e1 * e1
        denom = 1.0 - scatterer.r * rp_cur * e2
        t_cur = t_cur * e1 * scatterer.t / denom
        rp_cur = scatterer.rp + scatterer.t * scatterer.tp * rp_cur * e2 / denom
        out[:, k + 1] = np.log(np.abs(t_cur) ** 2)
    return out


def mc_localization_length(
    N: int,
    n_max: int,
    samples: int,
    seed: int,
    *,
    burn_in: int = 20,
    scatterer: Scatterer | None = None,
    continuous: bool = False,
    workers: int | None = None,
) -> LocalizationEstimate:
    """Estimate the localization length by Monte Carlo over phase chains.

    Each chain composes ``n_max`` copies of ``scatterer`` (default: the
    balanced coin) with independent inter-scatterer phases from
    ``PhaseEnsemble(N)``; chain ``i`` draws from its own counter-based
    stream keyed (seed, i), so the estimate is deterministic per seed and
    independent of chunking or worker count.  The fit regresses each
    chain's ln|t_{1,n}|^2 against n for n > ``burn_in`` (the transient
    window, tunable) and averages the per-chain slopes; xi_hat = -1/slope.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples for error bars")
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    if not 0 <= burn_in <= n_max - 2:
        raise ValueError(f"burn_in must lie in [0, {n_max - 2}] for a non-empty fit window")
    ensemble = PhaseEnsemble(N, continuous=continuous)
    if scatterer is None:
        scatterer = Scatterer.balanced_coin()
    workers = resolve_workers(workers)

    window = np.arange(burn_in + 1, n_max + 1, dtype=np.float64)
    w_centered = window - window.mean()
    w_norm = float(w_centered @ w_centered)

    def run_chunk(start: int, stop: int):
        batch = stop - start
        thetas = np.empty((batch, n_max - 1), dtype=np.float64)
        for row, index in enumerate(range(start, stop)):
            thetas[row] = ensemble.sample(sample_rng(seed, index), n_max - 1)
        ln_t2 = _chain_ln_t2(scatterer, thetas)
        fit = ln_t2[:, burn_in:]
        slopes = (fit - fit.mean(axis=1, keepdims=True)) @ w_centered / w_norm
        return (
            ln_t2.sum(axis=0),
            (ln_t2 * ln_t2).sum(axis=0),
            slopes.sum(),
            float(slopes @ slopes),
        )

    bounds = [(lo, min(lo + SCATTER_CHUNK, samples)) for lo in range(0, samples, SCATTER_CHUNK)]
    if workers == 1:
        chunk_results = [run_chunk(lo, hi) for lo, hi in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunk_results = list(pool.map(lambda b: run_chunk(*b), bounds))
    sum_ln = np.zeros(n_max)
    sum_ln2 = np.zeros(n_max)
    sum_slope = 0.0
    sum_slope2 = 0.0
    for c_ln, c_ln2, c_s, c_s2 in chunk_results:  # fixed reduction order
        sum_ln += c_ln
        sum_ln2 += c_ln2
        sum_slope += c_s
        sum_slope2 += c_s2

    mean_ln = sum_ln / samples
    spread = np.maximum(sum_ln2 / samples - mean_ln**2, 0.0)
    stderr_ln = np.sqrt(spread / (samples - 1))
    slope = sum_slope / samples
    slope_var = max(sum_slope2 / samples - slope**2, 0.0)
    slope_stderr = math.sqrt(slope_var / (samples - 1))
    if slope < 0.0:
        xi_hat = -1.0 / slope
        xi_stderr = slope_stderr / slope**2
    else:  # no decay resolved (e.g. reflectionless chain)
        xi_hat = math.inf
        xi_stderr = math.inf
    return LocalizationEstimate(
        N=N,
        n_max=n_max,
        samples=samples,
        burn_in=burn_in,
        seed=seed,
        slope=slope,
        slope_stderr=slope_stderr,
        xi_hat=xi_hat,
        xi_stderr=xi_stderr,
        lengths=np.arange(1, n_max + 1),
        mean_ln_t2=mean_ln,
        stderr_ln_t2=stderr_ln,
        meta={
            "continuous": continuous,
            "scatterer": {
                "r": scatterer.r,
                "t": scatterer.t,
                "rp": scatterer.rp,
                "tp": scatterer.tp,
            },
        },
    )
