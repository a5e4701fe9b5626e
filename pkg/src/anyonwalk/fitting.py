"""Fits and summary statistics for walk outputs.

Localization shows up as exponential decay of the disorder-averaged
log-probability away from the launch site; delocalization as unbounded
growth of the position variance.  The fits here are deliberately plain
least squares on the appropriate log scale, with explicit residual
thresholds instead of silent acceptance: a fit object always says whether
it believed its own model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .dists import SpatialDistribution, TimeSeries
from .errors import NumericalInvariantError

__all__ = [
    "FitResult",
    "variance",
    "ols_line",
    "exp_fit",
    "loc_length_fit",
    "growth_exponent",
]

NORMALIZATION_TOL = 1e-9
RESIDUAL_RMS_THRESHOLD = 2.0  # ln-units; above this a decay fit is distrusted


@dataclass(frozen=True)
class FitResult:
    """A fitted quantity with its standard error and a trust flag."""

    value: float
    stderr: float
    ok: bool
    residual_rms: float
    npoints: int
    meta: Mapping[str, Any] = field(default_factory=dict)


def variance(dist: SpatialDistribution) -> float:
    """Position variance of a site distribution.

    Checks normalization first: variance of an unnormalized vector is
    meaningless, so a breach raises instead of returning garbage.
    """
    total = float(dist.p.sum())
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise NumericalInvariantError(
            f"distribution not normalized: sum = {total!r}",
            diagnostics={"total": total},
        )
    s = dist.sites.astype(np.float64)
    m1 = float((dist.p * s).sum())
    m2 = float((dist.p * s * s).sum())
    return m2 - m1 * m1


def ols_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    """Least-squares line: slope, intercept, slope stderr, residual rms."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2:
        raise ValueError("need at least two points for a line fit")
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0.0:
        raise ValueError("degenerate fit: all x equal")
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    rms = float(np.sqrt((resid**2).mean()))
    if x.size > 2:
        sigma2 = float((resid**2).sum()) / (x.size - 2)
        slope_err = math.sqrt(sigma2 / sxx)
    else:
        slope_err = 0.0
    return slope, intercept, slope_err, rms


def exp_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, FitResult]:
    """Fit y = amplitude * exp(-rate * x) by least squares on ln y.

    Returns (amplitude, rate, fit) where ``fit.value`` is the decay rate.
    Requires strictly positive y; callers mask zeros (and take magnitudes)
    themselves so the masking is visible at the call site.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0.0):
        raise ValueError("exp_fit needs strictly positive values")
    slope, intercept, slope_err, rms = ols_line(x, np.log(y))
    rate = -slope
    amplitude = math.exp(intercept)
    fit = FitResult(
        value=rate,
        stderr=slope_err,
        ok=rms <= RESIDUAL_RMS_THRESHOLD,
        residual_rms=rms,
        npoints=int(x.size),
        meta={"amplitude": amplitude, "intercept": intercept},
    )
    return amplitude, rate, fit


def loc_length_fit(
    dist: SpatialDistribution,
    s0: int,
    window: tuple[float, float] | None = None,
) -> FitResult:
    """Localization length from the decay of mean ln p away from s0.

    ln p(s) ~ -|s - s0| / xi on each side; the two one-sided slopes are
    fitted separately and averaged.  ``window`` restricts to
    ``window[0] <= |s - s0| <= window[1]`` (defaults to (5, 0.8 t) when the
    distribution records its walk time, else (5, max distance)).  Sites
    with non-finite mean ln p (never reached in any sample) are excluded.
    The fit refuses to report a localization length (ok=False, value nan)
    when either slope is non-negative or the residuals exceed the trust
    threshold.
    """
    values = dist.mean_ln_p if dist.mean_ln_p is not None else None
    if values is None:
        with np.errstate(divide="ignore"):
            values = np.log(dist.p)
    distance = np.abs(dist.sites - s0).astype(np.float64)
    if window is None:
        t = dist.meta.get("t")
        upper = 0.8 * t if t else float(distance.max())
        window = (5.0, upper)
    lo, hi = window
    finite = np.isfinite(values)
    sided_slopes = []
    sided_errs = []
    rms_all = []
    npoints = 0
    for side in (dist.sites < s0, dist.sites > s0):
        mask = side & finite & (distance >= lo) & (distance <= hi)
        if mask.sum() < 3:
            return FitResult(
                value=float("nan"),
                stderr=float("nan"),
                ok=False,
                residual_rms=float("nan"),
                npoints=int(mask.sum()),
                meta={"reason": "too few points", "window": window},
            )
        slope, _, err, rms = ols_line(distance[mask], values[mask])
        sided_slopes.append(slope)
        sided_errs.append(err)
        rms_all.append(rms)
        npoints += int(mask.sum())
    mean_slope = 0.5 * (sided_slopes[0] + sided_slopes[1])
    rms = max(rms_all)
    if mean_slope >= 0.0 or max(sided_slopes) >= 0.0:
        return FitResult(
            value=float("nan"),
            stderr=float("nan"),
            ok=False,
            residual_rms=rms,
            npoints=npoints,
            meta={"reason": "non-negative decay slope", "slopes": tuple(sided_slopes)},
        )
    xi = -1.0 / mean_slope
    # d xi / d slope = 1 / slope^2; combine one-sided slope errors
    slope_err = 0.5 * math.hypot(sided_errs[0], sided_errs[1])
    xi_err = slope_err / mean_slope**2
    return FitResult(
        value=xi,
        stderr=xi_err,
        ok=rms <= RESIDUAL_RMS_THRESHOLD,
        residual_rms=rms,
        npoints=npoints,
        meta={"slopes": tuple(sided_slopes), "window": window},
    )


def growth_exponent(series: TimeSeries, window: tuple[int, int] | None = None) -> FitResult:
    """Exponent alpha of sigma^2(t) ~ t^alpha from a log-log line fit.

    Defaults to the last half of the series (early transients excluded);
    zero or negative variances inside the window are excluded from the fit
    but counted against it via the ok flag.
    """
    t = series.times
    v = series.values
    if window is None:
        window = (max(1, int(t.max()) // 2), int(t.max()))
    lo, hi = window
    mask = (t >= lo) & (t <= hi)
    usable = mask & (v > 0.0)
    if usable.sum() < 3:
        raise ValueError("growth_exponent needs at least 3 positive points in window")
    slope, _, err, rms = ols_line(np.log(t[usable]), np.log(v[usable]))
    return FitResult(
        value=slope,
        stderr=err,
        ok=bool(usable.sum() == mask.sum()) and rms <= RESIDUAL_RMS_THRESHOLD,
        residual_rms=rms,
        npoints=int(usable.sum()),
        meta={"window": window},
    )
