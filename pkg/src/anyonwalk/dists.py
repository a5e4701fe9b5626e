"""Result containers shared by the walk engines.

Every engine returns probabilities through :class:`SpatialDistribution`,
which enforces the two invariants all walk outputs must satisfy:
normalization to unity and non-negativity, both within a small float
tolerance.  Time-resolved quantities (variance growth, correlators) travel
as :class:`TimeSeries`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import NumericalInvariantError

__all__ = ["SpatialDistribution", "TimeSeries"]

NORMALIZATION_TOL = 1e-9
NEGATIVITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SpatialDistribution:
    """Probability of finding the walker on each lattice site.

    ``sites`` are 1-based site labels, ``p`` the probabilities.  Monte
    Carlo outputs also carry the standard error of the mean per site and
    the mean of ``ln p`` over samples (the self-averaging quantity used by
    localization-length fits); exact outputs leave those as ``None``.
    """

    sites: np.ndarray
    p: np.ndarray
    stderr: np.ndarray | None = None
    mean_ln_p: np.ndarray | None = None
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        sites = np.asarray(self.sites, dtype=np.int64)
        p = np.asarray(self.p, dtype=np.float64)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "p", p)
        if sites.shape != p.shape or sites.ndim != 1:
            raise ValueError("sites and p must be 1-d arrays of equal length")
        total = float(p.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise NumericalInvariantError(
                f"distribution normalization off by {total - 1.0:.3e}",
                diagnostics={"total": total},
            )
        lowest = float(p.min()) if p.size else 0.0
        if lowest < -NEGATIVITY_TOL:
            raise NumericalInvariantError(
                f"negative probability {lowest:.3e}",
                diagnostics={"min_p": lowest, "argmin_site": int(sites[int(p.argmin())])},
            )

    def site_index(self, site: int) -> int:
        hits = np.nonzero(self.sites == site)[0]
        if hits.size != 1:
            raise KeyError(f"site {site} not present")
        return int(hits[0])

    def probability(self, site: int) -> float:
        return float(self.p[self.site_index(site)])


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """A quantity indexed by integer time steps, with optional stderr."""

    times: np.ndarray
    values: np.ndarray
    stderr: np.ndarray | None = None
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=np.int64)
        values = np.asarray(self.values)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.shape != values.shape or times.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")

    def value_at(self, time: int) -> float:
        hits = np.nonzero(self.times == time)[0]
        if hits.size != 1:
            raise KeyError(f"time {time} not present")
        return float(self.values[int(hits[0])])
