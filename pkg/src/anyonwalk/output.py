"""Byte-stable run artifacts: CSV data, JSON manifests, native SVG plots.

CSV files are the data contract: fixed column order, one header row, LF
newlines, and floats rendered with ``repr`` (shortest round-trip form), so
identical numerical results serialize to identical bytes.  Every artifact
is fingerprinted with SHA-256 and the digests recorded in the run
manifest, which is written in ``running`` state before computation and
finalized (wall time, digests, ``completed``) afterwards.  SVG plots are
drawn with bare line/text primitives as a convenience; the CSV stays the
authoritative output.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .dists import SpatialDistribution, TimeSeries

__all__ = [
    "format_value",
    "write_csv",
    "distribution_csv",
    "series_csv",
    "correlator_csv",
    "scattering_csv",
    "RunManifest",
    "svg_line_plot",
]


def format_value(value: Any) -> str:
    """Render one CSV cell; floats use repr so bytes mirror the doubles."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Write rows under a fixed header; returns the file's SHA-256 digest."""
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row width {len(row)} != header width {len(header)}")
        lines.append(",".join(format_value(cell) for cell in row))
    data = ("\n".join(lines) + "\n").encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    return _digest_bytes(data)


def distribution_csv(path: Path, dist: SpatialDistribution) -> str:
    """Site distribution with per-site error bars where available."""
    stderr = dist.stderr if dist.stderr is not None else [None] * dist.sites.size
    mean_ln = dist.mean_ln_p if dist.mean_ln_p is not None else [None] * dist.sites.size
    rows = zip(dist.sites, dist.p, stderr, mean_ln)
    return write_csv(path, ("s", "p", "stderr", "mean_ln_p"), rows)


def series_csv(path: Path, series: TimeSeries, value_name: str = "variance") -> str:
    stderr = series.stderr if series.stderr is not None else [None] * series.times.size
    rows = zip(series.times, series.values, stderr)
    return write_csv(path, ("t", value_name, "stderr"), rows)


def correlator_csv(path: Path, tprimes: np.ndarray, values: np.ndarray) -> str:
    return write_csv(path, ("t_prime", "C"), zip(tprimes, values))


def scattering_csv(path: Path, lengths: np.ndarray, mean_ln_t2: np.ndarray, stderr: np.ndarray) -> str:
    return write_csv(path, ("n", "mean_ln_T", "stderr"), zip(lengths, mean_ln_t2, stderr))


def _jsonify(value: Any) -> Any:
    """Make config/result values JSON-serializable without losing precision."""
    if isinstance(value, Mapping):
        return {str(k): _jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonify(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else repr(v)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, Path):
        return str(value)
    return value


@dataclass
class RunManifest:
    """Provenance record for one run, written before and after computation.

    ``start`` persists the resolved configuration in ``running`` state so
    an interrupted run leaves evidence; ``finish`` adds wall time, output
    digests and summary values, flipping the status to ``completed``.
    """

    path: Path
    config: Mapping[str, Any]
    seed: int
    calibration: Mapping[str, Any]
    version: str = __version__
    status: str = "pending"
    wall_time_s: float | None = None
    outputs: dict[str, str] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)

    def _payload(self) -> dict:
        return {
            "version": self.version,
            "status": self.status,
            "seed": self.seed,
            "config": _jsonify(self.config),
            "calibration": _jsonify(self.calibration),
            "wall_time_s": self.wall_time_s,
            "outputs": dict(sorted(self.outputs.items())),
            "summary": _jsonify(self.summary),
        }

    def _write(self) -> None:
        self.path = Path(self.path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(
            json.dumps(self._payload(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    def start(self) -> None:
        self.status = "running"
        self._write()

    def record(self, name: str, digest: str) -> None:
        self.outputs[name] = digest

    def finish(self, wall_time_s: float, summary: Mapping[str, Any] | None = None) -> None:
        self.status = "completed"
        self.wall_time_s = round(float(wall_time_s), 3)
        if summary:
            self.summary.update(summary)
        self._write()


def _svg_path(xs: np.ndarray, ys: np.ndarray) -> str:
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    return f'<polyline fill="none" stroke-width="1.2" points="{pts}"/>'


def svg_line_plot(
    path: Path,
    x: np.ndarray,
    series: Sequence[tuple[str, np.ndarray]],
    title: str,
    x_label: str,
    y_label: str,
) -> str:
    """Minimal multi-line SVG plot (finite points only); returns digest."""
    width, height, margin = 640, 420, 56
    x = np.asarray(x, dtype=np.float64)
    finite_vals = np.concatenate(
        [np.asarray(v, dtype=np.float64)[np.isfinite(v)] for _, v in series]
    )
    if finite_vals.size == 0:
        raise ValueError("nothing finite to plot")
    x_lo, x_hi = float(x.min()), float(x.max())
    y_lo, y_hi = float(finite_vals.min()), float(finite_vals.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(v: np.ndarray) -> np.ndarray:
        return margin + (v - x_lo) / (x_hi - x_lo) * (width - 2 * margin)

    def sy(v: np.ndarray) -> np.ndarray:
        return height - margin - (v - y_lo) / (y_hi - y_lo) * (height - 2 * margin)

    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" font-size="15">{title}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{height - 14}" text-anchor="middle" '
        f'font-size="12">{x_label}</text>',
        f'<text x="16" y="{height / 2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {height / 2:.0f})">{y_label}</text>',
    ]
    for k, frac in enumerate(np.linspace(0.0, 1.0, 5)):
        xv = x_lo + frac * (x_hi - x_lo)
        yv = y_lo + frac * (y_hi - y_lo)
        px = margin + frac * (width - 2 * margin)
        py = height - margin - frac * (height - 2 * margin)
        parts.append(
            f'<text x="{px:.0f}" y="{height - margin + 16}" text-anchor="middle" '
            f'font-size="10">{xv:.4g}</text>'
        )
        parts.append(
            f'<text x="{margin - 6}" y="{py:.0f}" text-anchor="end" '
            f'font-size="10">{yv:.4g}</text>'
        )
    for k, (label, values) in enumerate(series):
        values = np.asarray(values, dtype=np.float64)
        keep = np.isfinite(values)
        color = colors[k % len(colors)]
        parts.append(_svg_path(sx(x[keep]), sy(values[keep])).replace(
            'stroke-width', f'stroke="{color}" stroke-width'))
        parts.append(
            f'<text x="{width - margin - 4}" y="{margin + 16 + 14 * k}" text-anchor="end" '
            f'font-size="11" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    data = ("\n".join(parts) + "\n").encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    return _digest_bytes(data)
