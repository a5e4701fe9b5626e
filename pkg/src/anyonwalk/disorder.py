"""Random island-occupation ensembles.

Disorder enters the walk only through the number of anyons ``m_s`` sitting
on each island.  The ensembles used throughout are uniform over a full
period of the statistics (``{1..N}`` in the main construction, ``{0..N-1}``
in the particle-hole shifted variant), but arbitrary finite tables are
supported for Monte Carlo work.  The exact disorder average over a full
period reduces to a congruence filter on traversal counts; the
``full_period_modulus`` hook tells the exact engines when that reduction
applies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["OccupationModel"]


@dataclass(frozen=True)
class OccupationModel:
    """A finite distribution over per-island occupation numbers."""

    values: tuple[int, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.values) != len(self.weights) or not self.values:
            raise ValueError("values and weights must be non-empty and equal length")
        if len(set(self.values)) != len(self.values):
            raise ValueError("duplicate occupation values")
        if any(v < 0 for v in self.values):
            raise ValueError("occupations must be non-negative")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be non-negative")
        total = float(sum(self.weights))
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {total}")

    @classmethod
    def uniform(cls, values) -> "OccupationModel":
        vals = tuple(int(v) for v in values)
        if not vals:
            raise ValueError("empty value set")
        return cls(vals, (1.0 / len(vals),) * len(vals))

    @classmethod
    def full_period(cls, order: int) -> "OccupationModel":
        """Uniform over {1..N}: every island carries at least one anyon."""
        if order < 1:
            raise ValueError("order must be >= 1")
        return cls.uniform(range(1, order + 1))

    @classmethod
    def shifted_period(cls, order: int) -> "OccupationModel":
        """Uniform over {0..N-1}: islands may be empty."""
        if order < 1:
            raise ValueError("order must be >= 1")
        return cls.uniform(range(order))

    def full_period_modulus(self, order: int) -> bool:
        """True when the model is uniform over a complete residue system mod N.

        Exactly then does averaging e^(i pi m d / N) over the model collapse
        to the congruence d = 0 (mod 2N), which the exact averaged engines
        rely on.
        """
        if len(self.values) != order:
            return False
        if sorted(v % order for v in self.values) != list(range(order)):
            return False
        return all(abs(w - 1.0 / order) <= 1e-12 for w in self.weights)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw island occupations; one rng stream per disorder realization."""
        vals = np.asarray(self.values, dtype=np.int64)
        probs = np.asarray(self.weights, dtype=np.float64)
        probs = probs / probs.sum()
        return rng.choice(vals, size=size, p=probs)
