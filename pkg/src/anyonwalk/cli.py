"""Reproducible experiment front end.

``anyonwalk run`` reads a TOML configuration (nested sections, documented
in the README), validates it against the per-kind schema, dispatches to
the matching engine, and writes byte-stable CSV data plus a JSON manifest
(and optional SVG plots) into the output directory.  ``anyonwalk verify``
replays the package's cross-checks — bracket calibration, oracle
equivalences, product identities, determinism — as a per-check table.
``anyonwalk bracket-eval`` is a debug probe for single braid words.

Exit codes: 0 success, 2 schema violation, 3 guard limit exceeded,
4 numerical-invariant breach (including calibration and failed verify
checks).  Environment overrides: ``ANYONWALK_OUTPUT_DIR`` (output
directory) and ``ANYONWALK_WORKERS`` (worker count) — nothing else.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np
import tomli

from . import __version__
from .abelian import (
    AbelianStatistics,
    averaged_distribution_exact,
    averaged_distribution_mc,
    sample_rng,
    statevec_distribution,
    temporal_noise_walk,
)
from .bracket import BraidWord, calibration_report, kauffman_bracket, markov_trace
from .disorder import OccupationModel
from .errors import (
    CalibrationError,
    GuardLimitError,
    NumericalInvariantError,
    SchemaError,
)
from .fitting import exp_fit, growth_exponent, loc_length_fit, variance
from .ising import (
    correlator,
    ising_averaged_distribution,
    ising_fixed_distribution,
    ising_mc_distribution,
    ising_variance_series,
)
from .output import (
    RunManifest,
    correlator_csv,
    distribution_csv,
    scattering_csv,
    series_csv,
    svg_line_plot,
)
from .paths import IslandConfig, WalkGeometry
from .scattering import mc_localization_length, xi_bounds
from .errors import BoundsInapplicableError

__all__ = ["main", "run_config", "validate_config", "verify_checks"]

KINDS = (
    "abelian-fixed",
    "abelian-averaged",
    "abelian-temporal",
    "ising-fixed",
    "ising-averaged",
    "scattering",
    "correlator",
)

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_GUARD = 3
EXIT_NUMERIC = 4


# --------------------------------------------------------------------------
# configuration schema


def _section(raw: Mapping[str, Any], name: str) -> dict:
    value = raw.get(name, {})
    if not isinstance(value, Mapping):
        raise SchemaError(f"[{name}] must be a table")
    return dict(value)


def _take(sec: dict, section: str, key: str, kind: type | tuple, default=None, required=False):
    if key not in sec:
        if required:
            raise SchemaError(f"missing required key {section}.{key}")
        return default
    value = sec.pop(key)
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is int and isinstance(value, bool):
        raise SchemaError(f"{section}.{key} must be an integer, got a boolean")
    if not isinstance(value, kind):
        want = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise SchemaError(f"{section}.{key} must be {want}, got {type(value).__name__}")
    return value


def _reject_unknown(section: str, sec: dict) -> None:
    if sec:
        raise SchemaError(f"unknown key(s) in [{section}]: {', '.join(sorted(sec))}")


def _int_pair(value, where: str) -> tuple[int, int] | None:
    if value is None:
        return None
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    ):
        raise SchemaError(f"{where} must be a pair of integers")
    return (int(value[0]), int(value[1]))


def _occupation_spec(raw: Mapping[str, Any], order: int, n: int | None) -> dict:
    sec = _section(raw, "occupation")
    model = _take(sec, "occupation", "model", str, default="full-period")
    values = _take(sec, "occupation", "values", list)
    _reject_unknown("occupation", sec)
    if model not in ("full-period", "shifted-period", "uniform", "explicit"):
        raise SchemaError(f"occupation.model must be one of full-period, "
                          f"shifted-period, uniform, explicit; got {model!r}")
    if model in ("uniform", "explicit"):
        if not values or not all(isinstance(v, int) and not isinstance(v, bool) for v in values):
            raise SchemaError(f"occupation.values must be a non-empty integer list for {model}")
        if model == "explicit" and n is not None and len(values) != n:
            raise SchemaError(f"occupation.values must list all {n} islands, got {len(values)}")
    elif values is not None:
        raise SchemaError(f"occupation.values not allowed with model {model!r}")
    return {"model": model, "values": values, "order": order}


def _occupation_model(spec: Mapping[str, Any]) -> OccupationModel:
    model = spec["model"]
    if model == "full-period":
        return OccupationModel.full_period(spec["order"])
    if model == "shifted-period":
        return OccupationModel.shifted_period(spec["order"])
    if model == "uniform":
        return OccupationModel.uniform(spec["values"])
    raise SchemaError(f"occupation model {model!r} cannot be sampled")


def _draw_config(spec: Mapping[str, Any], n: int, seed: int) -> IslandConfig:
    """The island configuration of a fixed-kind run: explicit or seeded."""
    if spec["model"] == "explicit":
        return IslandConfig(tuple(spec["values"]))
    occ = _occupation_model(spec).sample(sample_rng(seed, 0), n)
    return IslandConfig(tuple(int(v) for v in occ))


def validate_config(raw: Mapping[str, Any]) -> dict:
    """Normalize a parsed TOML mapping, applying defaults and type checks.

    Returns the fully resolved configuration recorded in the manifest.
    Raises SchemaError on unknown sections/keys, bad types, or geometry
    violating n >= 2t+1.
    """
    if not isinstance(raw, Mapping):
        raise SchemaError("configuration root must be a table")
    known = {"run", "geometry", "statistics", "occupation", "sampling",
             "noise", "scattering", "correlator", "fit"}
    unknown = set(raw) - known
    if unknown:
        raise SchemaError(f"unknown section(s): {', '.join(sorted(unknown))}")

    run = _section(raw, "run")
    kind = _take(run, "run", "kind", str, required=True)
    if kind not in KINDS:
        raise SchemaError(f"run.kind must be one of {', '.join(KINDS)}; got {kind!r}")
    seed = _take(run, "run", "seed", int, default=0)
    if not 0 <= seed < 2**63:
        raise SchemaError("run.seed must satisfy 0 <= seed < 2**63")
    output_dir = _take(run, "run", "output_dir", str, default="out")
    label = _take(run, "run", "label", str, default=kind)
    plots = _take(run, "run", "plots", bool, default=True)
    _reject_unknown("run", run)
    cfg: dict[str, Any] = {
        "run": {"kind": kind, "seed": seed, "output_dir": output_dir,
                "label": label, "plots": plots}
    }

    fit = _section(raw, "fit")
    xi_window = _int_pair(_take(fit, "fit", "xi_window", list), "fit.xi_window")
    exponent_window = _int_pair(_take(fit, "fit", "exponent_window", list), "fit.exponent_window")
    corr_window = _int_pair(_take(fit, "fit", "correlator_window", list), "fit.correlator_window")
    _reject_unknown("fit", fit)
    cfg["fit"] = {"xi_window": xi_window, "exponent_window": exponent_window,
                  "correlator_window": corr_window}

    sampling = _section(raw, "sampling")
    samples = _take(sampling, "sampling", "samples", int, default=500)
    workers = _take(sampling, "sampling", "workers", int)
    method = _take(sampling, "sampling", "method", str, default="exact"
                   if kind == "ising-averaged" else "mc")
    _reject_unknown("sampling", sampling)
    if samples < 2:
        raise SchemaError("sampling.samples must be >= 2")
    if workers is not None and workers < 1:
        raise SchemaError("sampling.workers must be >= 1")
    env_workers = os.environ.get("ANYONWALK_WORKERS")
    if env_workers is not None:
        try:
            workers = int(env_workers)
        except ValueError as exc:
            raise SchemaError(f"ANYONWALK_WORKERS must be an integer: {env_workers!r}") from exc
        if workers < 1:
            raise SchemaError("ANYONWALK_WORKERS must be >= 1")
    if method not in ("exact", "mc"):
        raise SchemaError(f"sampling.method must be 'exact' or 'mc', got {method!r}")
    cfg["sampling"] = {"samples": samples, "workers": workers, "method": method}

    needs_geometry = kind in ("abelian-fixed", "abelian-averaged", "abelian-temporal",
                              "ising-fixed", "ising-averaged")
    if needs_geometry:
        geo = _section(raw, "geometry")
        n = _take(geo, "geometry", "n", int, required=True)
        t = _take(geo, "geometry", "t", int, required=True)
        s0 = _take(geo, "geometry", "s0", int, default=0)
        _reject_unknown("geometry", geo)
        if n < 1 or t < 0:
            raise SchemaError(f"geometry needs n >= 1 and t >= 0, got n={n} t={t}")
        if n < 2 * t + 1:
            raise SchemaError(f"geometry.n={n} violates n >= 2t+1 for t={t}")
        s0_val = s0 if s0 else -(-n // 2)
        if not (s0_val - t >= 1 and s0_val + t <= n):
            raise SchemaError(f"start site s0={s0_val} within {t} steps of the boundary")
        cfg["geometry"] = {"n": n, "t": t, "s0": s0_val}
    elif "geometry" in raw:
        raise SchemaError(f"[geometry] not used by kind {kind!r}")

    if kind.startswith("abelian"):
        stats = _section(raw, "statistics")
        order = _take(stats, "statistics", "N", int, required=True)
        sign = _take(stats, "statistics", "sign", int, default=1)
        _reject_unknown("statistics", stats)
        if order < 1:
            raise SchemaError("statistics.N must be >= 1")
        if sign not in (-1, 1):
            raise SchemaError("statistics.sign must be +1 or -1")
        cfg["statistics"] = {"N": order, "sign": sign}
        cfg["occupation"] = _occupation_spec(raw, order, cfg["geometry"]["n"])
    elif kind.startswith("ising"):
        if "statistics" in raw:
            raise SchemaError("[statistics] not used by Ising kinds")
        # Ising Monte Carlo / fixed configs default to one full period of
        # the four-fold trace periodicity in m_s.
        cfg["occupation"] = _occupation_spec(raw, 4, cfg["geometry"]["n"])
    elif "statistics" in raw or "occupation" in raw:
        raise SchemaError(f"[statistics]/[occupation] not used by kind {kind!r}")

    if kind == "abelian-temporal":
        noise = _section(raw, "noise")
        p_flip = _take(noise, "noise", "p_flip", float, required=True)
        region = _int_pair(_take(noise, "noise", "region", list), "noise.region")
        _reject_unknown("noise", noise)
        if not 0.0 <= p_flip <= 1.0:
            raise SchemaError("noise.p_flip must lie in [0, 1]")
        cfg["noise"] = {"p_flip": p_flip, "region": region}
    elif "noise" in raw:
        raise SchemaError(f"[noise] only used by abelian-temporal, not {kind!r}")

    if kind == "scattering":
        sc = _section(raw, "scattering")
        order = _take(sc, "scattering", "N", int, required=True)
        n_max = _take(sc, "scattering", "n_max", int, default=200)
        burn_in = _take(sc, "scattering", "burn_in", int, default=20)
        continuous = _take(sc, "scattering", "continuous", bool, default=False)
        _reject_unknown("scattering", sc)
        if order < 1:
            raise SchemaError("scattering.N must be >= 1")
        if n_max < 2:
            raise SchemaError("scattering.n_max must be >= 2")
        if not 0 <= burn_in <= n_max - 2:
            raise SchemaError(f"scattering.burn_in must lie in [0, {n_max - 2}]")
        cfg["scattering"] = {"N": order, "n_max": n_max, "burn_in": burn_in,
                             "continuous": continuous}
    elif "scattering" in raw:
        raise SchemaError(f"[scattering] only used by kind 'scattering', not {kind!r}")

    if kind == "correlator":
        corr = _section(raw, "correlator")
        t = _take(corr, "correlator", "t", int, required=True)
        tprimes = _take(corr, "correlator", "tprimes", list)
        _reject_unknown("correlator", corr)
        if t < 1:
            raise SchemaError("correlator.t must be >= 1")
        if tprimes is not None and not all(
            isinstance(v, int) and not isinstance(v, bool) and 0 <= v <= t for v in tprimes
        ):
            raise SchemaError("correlator.tprimes must be integers in 0..t")
        cfg["correlator"] = {"t": t, "tprimes": tprimes}
    elif "correlator" in raw:
        raise SchemaError(f"[correlator] only used by kind 'correlator', not {kind!r}")

    return cfg


def load_config(path: Path, overrides: Sequence[str] = ()) -> dict:
    """Parse a TOML config file and apply ``--set section.key=value`` flags."""
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except FileNotFoundError as exc:
        raise SchemaError(f"config file not found: {path}") from exc
    except tomli.TOMLDecodeError as exc:
        raise SchemaError(f"config file is not valid TOML: {exc}") from exc
    for item in overrides:
        if "=" not in item:
            raise SchemaError(f"--set expects section.key=value, got {item!r}")
        dotted, literal = item.split("=", 1)
        parts = dotted.strip().split(".")
        if len(parts) != 2 or not all(parts):
            raise SchemaError(f"--set expects section.key=value, got {item!r}")
        try:
            value = tomli.loads(f"v = {literal.strip()}")["v"]
        except tomli.TOMLDecodeError:
            value = literal.strip()  # bare strings may omit quotes
        raw.setdefault(parts[0], {})
        if not isinstance(raw[parts[0]], dict):
            raise SchemaError(f"--set cannot descend into non-table [{parts[0]}]")
        raw[parts[0]][parts[1]] = value
    return raw


# --------------------------------------------------------------------------
# run dispatch


def _fit_summary(fit) -> dict:
    return {
        "value": fit.value,
        "stderr": fit.stderr,
        "ok": fit.ok,
        "residual_rms": fit.residual_rms,
        "npoints": fit.npoints,
        "window": fit.meta.get("window"),
    }


def _write_walk_outputs(outdir, manifest, cfg, dist, series, summary) -> None:
    manifest.record("distribution.csv", distribution_csv(outdir / "distribution.csv", dist))
    summary["variance"] = variance(dist)
    if series is not None:
        manifest.record("variance.csv", series_csv(outdir / "variance.csv", series))
        window = cfg["fit"]["exponent_window"]
        try:
            summary["growth_exponent"] = _fit_summary(growth_exponent(series, window=window))
        except ValueError as exc:
            summary["growth_exponent"] = {"error": str(exc)}
    if cfg["run"]["plots"]:
        with np.errstate(divide="ignore"):
            ln_p = dist.mean_ln_p if dist.mean_ln_p is not None else np.log(dist.p)
        manifest.record(
            "distribution.svg",
            svg_line_plot(outdir / "distribution.svg", dist.sites,
                          [("mean ln p", ln_p)], "site distribution", "s", "ln p"),
        )
        if series is not None:
            manifest.record(
                "variance.svg",
                svg_line_plot(outdir / "variance.svg", series.times,
                              [("variance", series.values)],
                              "position variance", "t", "sigma^2"),
            )


def run_config(cfg: dict, outdir: Path) -> RunManifest:
    """Execute one validated configuration; returns the finished manifest."""
    kind = cfg["run"]["kind"]
    seed = cfg["run"]["seed"]
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(
        path=outdir / "manifest.json",
        config=cfg,
        seed=seed,
        calibration=calibration_report(),
    )
    manifest.start()
    started = time.perf_counter()
    summary: dict[str, Any] = {"kind": kind}

    geo = None
    if "geometry" in cfg:
        g = cfg["geometry"]
        geo = WalkGeometry(n=g["n"], t=g["t"], s0=g["s0"])
    samples = cfg["sampling"]["samples"]
    workers = cfg["sampling"]["workers"]

    if kind == "abelian-fixed":
        stats = AbelianStatistics(cfg["statistics"]["N"], cfg["statistics"]["sign"])
        config = _draw_config(cfg["occupation"], geo.n, seed)
        dist, series = statevec_distribution(config, stats, geo, return_series=True)
        summary["occupations_digest"] = sum(config.occupations)
        _write_walk_outputs(outdir, manifest, cfg, dist, series, summary)
    elif kind == "abelian-averaged":
        stats = AbelianStatistics(cfg["statistics"]["N"], cfg["statistics"]["sign"])
        occupation = _occupation_model(cfg["occupation"])
        if cfg["sampling"]["method"] == "exact":
            try:
                dist = averaged_distribution_exact(stats, geo, occupation)
            except ValueError as exc:  # non-full-period model: a config problem
                raise SchemaError(str(exc)) from exc
            series = None
        else:
            result = averaged_distribution_mc(stats, geo, occupation,
                                              samples=samples, seed=seed, workers=workers)
            dist, series = result.distribution, result.variance
            fit = loc_length_fit(dist, geo.s0, window=cfg["fit"]["xi_window"])
            summary["xi_loc"] = _fit_summary(fit)
        _write_walk_outputs(outdir, manifest, cfg, dist, series, summary)
    elif kind == "abelian-temporal":
        stats = AbelianStatistics(cfg["statistics"]["N"], cfg["statistics"]["sign"])
        occupation = _occupation_model(cfg["occupation"])
        result = temporal_noise_walk(stats, geo, cfg["noise"]["p_flip"],
                                     occupation=occupation,
                                     noise_region=cfg["noise"]["region"],
                                     samples=samples, seed=seed, workers=workers)
        _write_walk_outputs(outdir, manifest, cfg, result.distribution,
                            result.variance, summary)
    elif kind == "ising-fixed":
        config = _draw_config(cfg["occupation"], geo.n, seed)
        dist = ising_fixed_distribution(config, geo)
        _write_walk_outputs(outdir, manifest, cfg, dist, None, summary)
    elif kind == "ising-averaged":
        if cfg["sampling"]["method"] == "exact":
            dist = ising_averaged_distribution(geo)
            series = ising_variance_series(geo)
        else:
            occupation = _occupation_model(cfg["occupation"])
            dist = ising_mc_distribution(geo, occupation, samples=samples,
                                         seed=seed, workers=workers)
            series = None
        _write_walk_outputs(outdir, manifest, cfg, dist, series, summary)
    elif kind == "scattering":
        sc = cfg["scattering"]
        est = mc_localization_length(sc["N"], sc["n_max"], samples, seed,
                                     burn_in=sc["burn_in"],
                                     continuous=sc["continuous"], workers=workers)
        manifest.record(
            "scattering.csv",
            scattering_csv(outdir / "scattering.csv", est.lengths,
                           est.mean_ln_t2, est.stderr_ln_t2),
        )
        try:
            lo, hi = xi_bounds(1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0), sc["N"])
            bounds_note = None
        except BoundsInapplicableError as exc:
            lo = hi = None
            bounds_note = str(exc)
        scatter_summary = {
            "N": sc["N"],
            "xi_hat": est.xi_hat,
            "xi_stderr": est.xi_stderr,
            "xi_lower": lo,
            "xi_upper": hi,
            "slope": est.slope,
            "slope_stderr": est.slope_stderr,
        }
        if bounds_note:
            scatter_summary["bounds_note"] = bounds_note
        text = json.dumps(scatter_summary, indent=2, sort_keys=True,
                          default=repr) + "\n"
        (outdir / "scattering_summary.json").write_text(text, encoding="utf-8")
        manifest.record("scattering_summary.json",
                        hashlib.sha256(text.encode("utf-8")).hexdigest())
        summary.update(scatter_summary)
        if cfg["run"]["plots"]:
            manifest.record(
                "scattering.svg",
                svg_line_plot(outdir / "scattering.svg", est.lengths,
                              [("mean ln T", est.mean_ln_t2)],
                              "transmission decay", "n", "ln T"),
            )
    elif kind == "correlator":
        corr_cfg = cfg["correlator"]
        result = correlator(corr_cfg["t"], tprimes=corr_cfg["tprimes"])
        manifest.record(
            "correlator.csv",
            correlator_csv(outdir / "correlator.csv", result.tprimes, result.values),
        )
        summary["mean_sign"] = result.mean_sign
        summary["pair_count"] = result.pair_count
        window = cfg["fit"]["correlator_window"] or (2, min(6, corr_cfg["t"]))
        mask = ((result.tprimes >= window[0]) & (result.tprimes <= window[1])
                & (result.values > 0))
        if mask.sum() >= 3:
            _, rate, fit = exp_fit(result.tprimes[mask].astype(float), result.values[mask])
            summary["decay_rate"] = rate
            summary["exp_fit"] = _fit_summary(fit)
        else:
            summary["exp_fit"] = {"error": f"fewer than 3 positive points in {window}"}
        if cfg["run"]["plots"]:
            manifest.record(
                "correlator.svg",
                svg_line_plot(outdir / "correlator.svg", result.tprimes,
                              [("C(t, t')", result.values)],
                              "fusion-sign correlator", "t'", "C"),
            )
    else:  # pragma: no cover - validate_config guarantees the kind
        raise SchemaError(f"unhandled kind {kind!r}")

    manifest.finish(time.perf_counter() - started, summary)
    return manifest


# --------------------------------------------------------------------------
# verify


def verify_checks() -> list[tuple[str, Callable[[], None]]]:
    """The named cross-checks behind ``anyonwalk verify``.

    Reduced-scale versions of the package's oracle equivalences; the full
    suite lives in the test directory.
    """
    from . import paths
    from .scattering import (
        BlockAmplitudes,
        Scatterer,
        compose_block,
        cyclotomic_product,
    )

    def check_calibration():
        report = calibration_report()
        worst = max(check["residual"] for check in report["checks"])
        assert worst <= 1e-9, f"calibration residual {worst}"

    def check_pathsum_statevec():
        from .abelian import pathsum_distribution

        rng = np.random.default_rng(1)
        geo = WalkGeometry(n=15, t=6, s0=8)
        for order in (2, 4, 8):
            stats = AbelianStatistics(order)
            for _ in range(4):
                config = IslandConfig(tuple(rng.integers(0, 2 * order, geo.n)))
                a = pathsum_distribution(config, stats, geo)
                b = statevec_distribution(config, stats, geo)
                dev = float(np.abs(a.p - b.p).max())
                assert dev < 1e-12, f"pathsum vs statevec dev {dev} at N={order}"

    def check_exact_vs_mc():
        stats = AbelianStatistics(8)
        geo = WalkGeometry(n=13, t=6, s0=7)
        exact = averaged_distribution_exact(stats, geo).p
        mc = averaged_distribution_mc(stats, geo, samples=4000, seed=3)
        stderr = np.where(mc.distribution.stderr > 0, mc.distribution.stderr, np.inf)
        z = float(np.abs(mc.distribution.p - exact).max())
        zs = float((np.abs(mc.distribution.p - exact) / stderr).max())
        assert zs < 4.0, f"exact vs MC z-score {zs} (max dev {z})"

    def check_ising_oracle():
        from .ising import ising_pair_trace
        from .invariants import fusion_trace_oracle

        rng = np.random.default_rng(5)
        geo_t, s0 = 4, 6
        pairs = [p for p in paths.enumerate_path_pairs(geo_t, s0, s0) if p.is_admissible]
        for _ in range(3):
            config = IslandConfig(tuple(rng.integers(0, 3, 11)))
            for pair in pairs[:: max(1, len(pairs) // 12)]:
                a = ising_pair_trace(pair, config, s0)
                b = fusion_trace_oracle(pair, config, s0)
                assert abs(a - b) < 1e-9, f"trace formula vs bracket oracle: {a} vs {b}"

    def check_ising_average():
        geo = WalkGeometry(n=7, t=3, s0=4)
        avg = ising_averaged_distribution(geo).p
        total = np.zeros_like(avg)
        for code in range(4**6):
            occ = [(code >> (2 * k)) & 3 for k in range(6)]
            config = IslandConfig(tuple(m + 1 for m in occ) + (1,))
            total += ising_fixed_distribution(config, geo).p
        dev = float(np.abs(total / 4**6 - avg).max())
        assert dev < 1e-12, f"averaged vs brute-force config average dev {dev}"

    def check_t_coefficient():
        from .ising import t_coefficient

        rng = np.random.default_rng(9)
        for _ in range(300):
            n_vars = int(rng.integers(1, 9))
            terms = [
                (a, b)
                for a in range(n_vars)
                for b in range(a + 1, n_vars)
                if rng.random() < 0.4
            ]
            fast = t_coefficient(terms, n_vars, method="fast")
            brute = t_coefficient(terms, n_vars, method="brute")
            assert fast == brute, f"T coefficient mismatch on {terms}"

    def check_cyclotomic():
        rng = np.random.default_rng(11)
        for _ in range(200):
            c = complex(rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7))
            order = int(rng.integers(1, 33))
            dev = abs(cyclotomic_product(c, order) - (1 - c**order))
            assert dev < 1e-12, f"cyclotomic identity dev {dev}"

    def check_xi_bounds():
        h = 1.0 / np.sqrt(2.0)
        lo, hi = xi_bounds(h, h, 8)
        assert abs(lo - 1.4118244954590442) < 1e-12
        assert abs(hi - 1.4770774922754197) < 1e-12
        lo_inf, hi_inf = xi_bounds(h, h, 700)
        assert abs(lo_inf - 1 / np.log(2)) < 1e-3 and abs(hi_inf - 1 / np.log(2)) < 1e-3

    def check_compose_oracle():
        rng = np.random.default_rng(13)
        for _ in range(10):
            z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            q, _ = np.linalg.qr(z)
            sc = Scatterer(r=q[0, 0], t=q[1, 0], rp=q[1, 1], tp=q[0, 1])
            sc.check_unitarity(1e-10)
            blk = BlockAmplitudes.from_scatterer(sc)
            m = np.array([[(sc.t * sc.tp - sc.r * sc.rp) / sc.tp, sc.rp / sc.tp],
                          [-sc.r / sc.tp, 1.0 / sc.tp]])
            det = sc.t / sc.tp
            total = m
            for theta in rng.uniform(0, 2 * np.pi, 12):
                blk = compose_block(blk, theta, sc)
                prop = np.diag([np.exp(1j * theta), np.exp(-1j * theta)])
                total = m @ prop @ total
                det *= sc.t / sc.tp
                flux = abs(abs(blk.t) ** 2 + abs(blk.rp) ** 2 - 1)
                assert flux < 1e-12, f"flux defect {flux}"
                assert abs(blk.t - det / total[1, 1]) < 1e-10, "transfer oracle mismatch"

    def check_scattering_mc():
        est = mc_localization_length(8, n_max=150, samples=2000, seed=17)
        lo, hi = xi_bounds(1 / np.sqrt(2), 1 / np.sqrt(2), 8)
        ok = lo - 3 * est.xi_stderr <= est.xi_hat <= hi + 3 * est.xi_stderr
        assert ok, f"xi_hat {est.xi_hat} outside [{lo}, {hi}] at 3 sigma"

    def check_fit_roundtrip():
        x = np.arange(3.0, 40.0)
        amp, rate, fit = exp_fit(x, 1.7679 * np.exp(-0.57699 * x))
        assert abs(amp - 1.7679) < 1e-6 and abs(rate - 0.57699) < 1e-6, "exp_fit round-trip"

    def check_determinism():
        import tempfile

        cfg = validate_config({
            "run": {"kind": "abelian-averaged", "seed": 5},
            "geometry": {"n": 41, "t": 20},
            "statistics": {"N": 8},
            "sampling": {"samples": 64, "method": "mc"},
        })
        digests = []
        for workers in (1, 3):
            cfg["sampling"]["workers"] = workers
            with tempfile.TemporaryDirectory() as tmp:
                manifest = run_config(cfg, Path(tmp))
                digests.append(manifest.outputs["distribution.csv"])
        assert digests[0] == digests[1], "CSV digest differs across worker counts"

    def check_periodicity():
        from .ising import ising_pair_trace

        geo_t, s0 = 4, 6
        pairs = [p for p in paths.enumerate_path_pairs(geo_t, s0, s0) if p.is_admissible]
        for pair in pairs[:: max(1, len(pairs) // 10)]:
            for shift in range(3):
                m_low = IslandConfig(tuple([1 + shift] * 11))
                m_high = IslandConfig(tuple([5 + shift] * 11))
                a = ising_pair_trace(pair, m_low, s0)
                b = ising_pair_trace(pair, m_high, s0)
                assert abs(a - b) < 1e-12, "trace not 4-periodic in m_s"

    return [
        ("bracket-calibration", check_calibration),
        ("pathsum-vs-statevec", check_pathsum_statevec),
        ("exact-vs-mc-average", check_exact_vs_mc),
        ("ising-formula-vs-bracket-oracle", check_ising_oracle),
        ("ising-average-vs-brute-force", check_ising_average),
        ("ising-trace-periodicity", check_periodicity),
        ("t-coefficient-fast-vs-brute", check_t_coefficient),
        ("cyclotomic-product-identity", check_cyclotomic),
        ("xi-bounds-frozen-values", check_xi_bounds),
        ("compose-vs-transfer-oracle", check_compose_oracle),
        ("scattering-mc-in-bounds", check_scattering_mc),
        ("fit-round-trip", check_fit_roundtrip),
        ("csv-determinism-across-workers", check_determinism),
    ]


def _cmd_verify(_args) -> int:
    checks = verify_checks()
    width = max(len(name) for name, _ in checks)
    failures = 0
    total_started = time.perf_counter()
    for name, check in checks:
        started = time.perf_counter()
        try:
            check()
        except Exception as exc:  # noqa: BLE001 - report every failure mode
            failures += 1
            status = "FAIL"
            detail = f"  {type(exc).__name__}: {exc}"
        else:
            status = "PASS"
            detail = ""
        elapsed = time.perf_counter() - started
        print(f"{status}  {name:<{width}}  {elapsed:7.2f}s{detail}")
    total = time.perf_counter() - total_started
    print(f"{len(checks) - failures}/{len(checks)} checks passed in {total:.1f}s")
    return EXIT_OK if failures == 0 else EXIT_NUMERIC


# --------------------------------------------------------------------------
# bracket-eval


def _cmd_bracket_eval(args) -> int:
    tokens = args.word.replace(",", " ").split()
    crossings = []
    for token in tokens:
        try:
            value = int(token)
        except ValueError as exc:
            raise SchemaError(f"braid word tokens must be signed integers, got {token!r}") from exc
        if value == 0:
            raise SchemaError("generator index 0 is not valid (use ±1, ±2, ...)")
        crossings.append((abs(value), 1 if value > 0 else -1))
    strands = args.strands or (max((g for g, _ in crossings), default=0) + 1)
    word = BraidWord(strands, tuple(crossings))
    report = calibration_report()
    bracket_tl = kauffman_bracket(word, method="tl")
    bracket_skein = kauffman_bracket(word, method="skein")
    trace = markov_trace(word)
    print(f"root A = {report['root']['re']:+.12f}{report['root']['im']:+.12f}i "
          f"(loop value {report['loop_value']:+.6f})")
    print(f"strands {word.strands}, crossings {len(word.crossings)}")
    print(f"bracket (TL)    = {bracket_tl.real:+.12f}{bracket_tl.imag:+.12f}i")
    print(f"bracket (skein) = {bracket_skein.real:+.12f}{bracket_skein.imag:+.12f}i")
    print(f"markov trace    = {trace.real:+.12f}{trace.imag:+.12f}i")
    return EXIT_OK


def _cmd_run(args) -> int:
    raw = load_config(Path(args.config), args.set or [])
    cfg = validate_config(raw)
    outdir = os.environ.get("ANYONWALK_OUTPUT_DIR") or cfg["run"]["output_dir"]
    cfg["run"]["output_dir"] = str(outdir)
    manifest = run_config(cfg, Path(outdir) / cfg["run"]["label"])
    print(f"kind      {cfg['run']['kind']}")
    print(f"seed      {cfg['run']['seed']}")
    print(f"outputs   {manifest.path.parent}")
    for name, digest in sorted(manifest.outputs.items()):
        print(f"  {name}  sha256:{digest[:16]}")
    print(f"wall time {manifest.wall_time_s}s")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anyonwalk",
        description="Anyonic quantum walks over random island backgrounds",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured experiment")
    p_run.add_argument("--config", required=True, help="TOML configuration file")
    p_run.add_argument("--set", action="append", metavar="SEC.KEY=VAL",
                       help="override a config value (repeatable)")
    p_run.set_defaults(func=_cmd_run)

    p_verify = sub.add_parser("verify", help="run the invariant cross-check suite")
    p_verify.set_defaults(func=_cmd_verify)

    p_bracket = sub.add_parser("bracket-eval", help="evaluate one braid word (debug)")
    p_bracket.add_argument("--word", required=True,
                           help="signed generator list, e.g. '1 1 1' or '1,-2,1'")
    p_bracket.add_argument("--strands", type=int, default=0,
                           help="strand count (default: inferred)")
    p_bracket.set_defaults(func=_cmd_bracket_eval)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except GuardLimitError as exc:
        print(f"guard limit: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (NumericalInvariantError, CalibrationError) as exc:
        print(f"numerical invariant breached: {exc}", file=sys.stderr)
        diagnostics = getattr(exc, "diagnostics", None)
        if diagnostics:
            print(json.dumps({k: repr(v) for k, v in diagnostics.items()},
                             indent=2, sort_keys=True), file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
