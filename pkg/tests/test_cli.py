"""Tests for the command-line front end.

Exit-code contract: 0 success, 2 schema violation, 3 guard limit,
4 numerical-invariant breach (including calibration failures and failed
verify checks).  Runs execute in-process through ``main(argv)`` so tests
can monkeypatch fault injections and capture output; artifacts land in
pytest tmp directories via ``--set run.output_dir=...``.
"""

import cmath
import hashlib
import json
import math

import numpy as np
import pytest

import anyonwalk.bracket
from anyonwalk.cli import (
    EXIT_GUARD,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_SCHEMA,
    load_config,
    main,
    run_config,
    validate_config,
    verify_checks,
)
from anyonwalk.errors import SchemaError


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    monkeypatch.delenv("ANYONWALK_WORKERS", raising=False)
    monkeypatch.delenv("ANYONWALK_OUTPUT_DIR", raising=False)


def minimal_raw(kind: str = "abelian-fixed") -> dict:
    raw: dict = {"run": {"kind": kind, "seed": 1}}
    if kind.startswith("abelian") or kind.startswith("ising"):
        raw["geometry"] = {"n": 21, "t": 8}
    if kind.startswith("abelian"):
        raw["statistics"] = {"N": 4}
    if kind == "abelian-temporal":
        raw["noise"] = {"p_flip": 0.5}
    if kind == "scattering":
        raw["scattering"] = {"N": 8, "n_max": 60}
    if kind == "correlator":
        raw["correlator"] = {"t": 6}
    return raw


def write_toml(path, raw: dict) -> None:
    lines = []
    for section, table in raw.items():
        lines.append(f"[{section}]")
        for key, value in table.items():
            if isinstance(value, bool):
                lines.append(f"{key} = {'true' if value else 'false'}")
            elif isinstance(value, str):
                lines.append(f'{key} = "{value}"')
            elif isinstance(value, list):
                lines.append(f"{key} = {value}")
            else:
                lines.append(f"{key} = {value}")
    path.write_text("\n".join(lines) + "\n")


class TestValidateConfig:
    def test_defaults_filled_in(self):
        cfg = validate_config(minimal_raw())
        assert cfg["run"]["kind"] == "abelian-fixed"
        assert cfg["run"]["output_dir"] == "out"
        assert cfg["run"]["plots"] is True
        assert cfg["sampling"]["samples"] == 500
        assert cfg["geometry"]["s0"] == 11  # centre of 21 sites
        assert cfg["statistics"]["sign"] == 1
        assert cfg["occupation"]["model"] == "full-period"

    def test_every_kind_validates(self):
        for kind in ("abelian-fixed", "abelian-averaged", "abelian-temporal",
                     "ising-fixed", "ising-averaged", "scattering", "correlator"):
            cfg = validate_config(minimal_raw(kind))
            assert cfg["run"]["kind"] == kind

    def test_missing_kind(self):
        with pytest.raises(SchemaError, match="run.kind"):
            validate_config({"run": {}})

    def test_unknown_kind(self):
        raw = minimal_raw()
        raw["run"]["kind"] = "heisenberg"
        with pytest.raises(SchemaError, match="run.kind"):
            validate_config(raw)

    def test_unknown_section(self):
        raw = minimal_raw()
        raw["walks"] = {}
        with pytest.raises(SchemaError, match="unknown section"):
            validate_config(raw)

    def test_unknown_key(self):
        raw = minimal_raw()
        raw["geometry"]["m"] = 3
        with pytest.raises(SchemaError, match=r"unknown key.*geometry.*m"):
            validate_config(raw)

    def test_wrong_type(self):
        raw = minimal_raw()
        raw["geometry"]["t"] = "8"
        with pytest.raises(SchemaError, match="geometry.t must be int"):
            validate_config(raw)

    def test_bool_is_not_an_int(self):
        raw = minimal_raw()
        raw["geometry"]["t"] = True
        with pytest.raises(SchemaError, match="geometry.t"):
            validate_config(raw)

    def test_geometry_wrap_guard(self):
        raw = minimal_raw()
        raw["geometry"] = {"n": 16, "t": 8}
        with pytest.raises(SchemaError, match="2t\\+1"):
            validate_config(raw)

    def test_start_site_near_boundary(self):
        raw = minimal_raw()
        raw["geometry"] = {"n": 21, "t": 8, "s0": 3}
        with pytest.raises(SchemaError, match="boundary"):
            validate_config(raw)

    def test_bad_seed(self):
        raw = minimal_raw()
        raw["run"]["seed"] = -1
        with pytest.raises(SchemaError, match="seed"):
            validate_config(raw)

    def test_bad_samples(self):
        raw = minimal_raw("abelian-averaged")
        raw["sampling"] = {"samples": 1}
        with pytest.raises(SchemaError, match="samples"):
            validate_config(raw)

    def test_bad_statistics(self):
        raw = minimal_raw()
        raw["statistics"] = {"N": 0}
        with pytest.raises(SchemaError, match="statistics.N"):
            validate_config(raw)
        raw["statistics"] = {"N": 4, "sign": 2}
        with pytest.raises(SchemaError, match="sign"):
            validate_config(raw)

    def test_statistics_rejected_for_ising(self):
        raw = minimal_raw("ising-fixed")
        raw["statistics"] = {"N": 4}
        with pytest.raises(SchemaError, match="not used by Ising"):
            validate_config(raw)

    def test_geometry_rejected_for_scattering(self):
        raw = minimal_raw("scattering")
        raw["geometry"] = {"n": 21, "t": 8}
        with pytest.raises(SchemaError, match="geometry"):
            validate_config(raw)

    def test_noise_only_for_temporal(self):
        raw = minimal_raw()
        raw["noise"] = {"p_flip": 0.5}
        with pytest.raises(SchemaError, match="noise"):
            validate_config(raw)
        raw = minimal_raw("abelian-temporal")
        raw["noise"]["p_flip"] = 1.5
        with pytest.raises(SchemaError, match="p_flip"):
            validate_config(raw)

    def test_occupation_validation(self):
        raw = minimal_raw()
        raw["occupation"] = {"model": "poisson"}
        with pytest.raises(SchemaError, match="occupation.model"):
            validate_config(raw)
        raw["occupation"] = {"model": "full-period", "values": [1, 2]}
        with pytest.raises(SchemaError, match="values not allowed"):
            validate_config(raw)
        raw["occupation"] = {"model": "explicit", "values": [1, 2, 3]}
        with pytest.raises(SchemaError, match="all 21 islands"):
            validate_config(raw)

    def test_correlator_tprimes_range(self):
        raw = minimal_raw("correlator")
        raw["correlator"]["tprimes"] = [0, 9]
        with pytest.raises(SchemaError, match="tprimes"):
            validate_config(raw)

    def test_scattering_burn_in_window(self):
        raw = minimal_raw("scattering")
        raw["scattering"]["burn_in"] = 59
        with pytest.raises(SchemaError, match="burn_in"):
            validate_config(raw)

    def test_workers_env_override(self, monkeypatch):
        monkeypatch.setenv("ANYONWALK_WORKERS", "3")
        cfg = validate_config(minimal_raw())
        assert cfg["sampling"]["workers"] == 3
        monkeypatch.setenv("ANYONWALK_WORKERS", "zero")
        with pytest.raises(SchemaError, match="ANYONWALK_WORKERS"):
            validate_config(minimal_raw())
        monkeypatch.setenv("ANYONWALK_WORKERS", "0")
        with pytest.raises(SchemaError, match="ANYONWALK_WORKERS"):
            validate_config(minimal_raw())


class TestLoadConfig:
    def test_missing_file(self, tmp_path):
        with pytest.raises(SchemaError, match="not found"):
            load_config(tmp_path / "absent.toml")

    def test_invalid_toml(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("run = [unterminated\n")
        with pytest.raises(SchemaError, match="not valid TOML"):
            load_config(path)

    def test_set_overrides(self, tmp_path):
        path = tmp_path / "cfg.toml"
        write_toml(path, minimal_raw())
        raw = load_config(path, ["run.seed=9", "geometry.t=4", "run.label=alt"])
        assert raw["run"]["seed"] == 9
        assert raw["geometry"]["t"] == 4
        assert raw["run"]["label"] == "alt"  # bare string without quotes

    def test_set_creates_section(self, tmp_path):
        path = tmp_path / "cfg.toml"
        write_toml(path, minimal_raw())
        raw = load_config(path, ["sampling.samples=32"])
        assert raw["sampling"]["samples"] == 32

    def test_set_malformed(self, tmp_path):
        path = tmp_path / "cfg.toml"
        write_toml(path, minimal_raw())
        with pytest.raises(SchemaError, match="--set"):
            load_config(path, ["run.seed"])
        with pytest.raises(SchemaError, match="--set"):
            load_config(path, ["seed=9"])


def run_cli(tmp_path, raw: dict, *extra: str) -> int:
    config_path = tmp_path / "config.toml"
    write_toml(config_path, raw)
    return main([
        "run", "--config", str(config_path),
        "--set", f"run.output_dir={tmp_path / 'out'}",
        *extra,
    ])


class TestRunSubcommand:
    def test_abelian_fixed_artifacts(self, tmp_path, capsys):
        raw = minimal_raw()
        assert run_cli(tmp_path, raw) == EXIT_OK
        outdir = tmp_path / "out" / "abelian-fixed"
        manifest = json.loads((outdir / "manifest.json").read_text())
        assert manifest["status"] == "completed"
        assert manifest["config"]["run"]["seed"] == 1
        for name, digest in manifest["outputs"].items():
            actual = hashlib.sha256((outdir / name).read_bytes()).hexdigest()
            assert actual == digest, name
        assert {"distribution.csv", "variance.csv"} <= set(manifest["outputs"])
        assert manifest["summary"]["variance"] > 0
        header = (outdir / "distribution.csv").read_text().splitlines()[0]
        assert header == "s,p,stderr,mean_ln_p"
        assert "sha256:" in capsys.readouterr().out

    def test_abelian_averaged_exact(self, tmp_path):
        raw = minimal_raw("abelian-averaged")
        raw["geometry"] = {"n": 17, "t": 6}
        raw["sampling"] = {"method": "exact"}
        assert run_cli(tmp_path, raw) == EXIT_OK
        outdir = tmp_path / "out" / "abelian-averaged"
        assert (outdir / "distribution.csv").exists()

    def test_abelian_averaged_exact_needs_full_period(self, tmp_path):
        raw = minimal_raw("abelian-averaged")
        raw["sampling"] = {"method": "exact"}
        raw["occupation"] = {"model": "uniform", "values": [1, 2]}
        assert run_cli(tmp_path, raw) == EXIT_SCHEMA

    def test_abelian_averaged_mc_with_fit(self, tmp_path):
        raw = minimal_raw("abelian-averaged")
        raw["geometry"] = {"n": 41, "t": 20}
        raw["statistics"] = {"N": 8}
        raw["sampling"] = {"samples": 64, "method": "mc"}
        assert run_cli(tmp_path, raw) == EXIT_OK
        manifest = json.loads(
            (tmp_path / "out" / "abelian-averaged" / "manifest.json").read_text()
        )
        assert "xi_loc" in manifest["summary"]
        assert "growth_exponent" in manifest["summary"]

    def test_abelian_temporal(self, tmp_path):
        raw = minimal_raw("abelian-temporal")
        raw["geometry"] = {"n": 21, "t": 10}
        raw["sampling"] = {"samples": 32}
        assert run_cli(tmp_path, raw) == EXIT_OK
        outdir = tmp_path / "out" / "abelian-temporal"
        assert (outdir / "variance.csv").exists()

    def test_ising_fixed_and_averaged(self, tmp_path):
        raw = minimal_raw("ising-fixed")
        raw["geometry"] = {"n": 13, "t": 5}
        assert run_cli(tmp_path, raw) == EXIT_OK
        raw = minimal_raw("ising-averaged")
        raw["geometry"] = {"n": 13, "t": 5}
        assert run_cli(tmp_path, raw) == EXIT_OK
        outdir = tmp_path / "out" / "ising-averaged"
        assert (outdir / "variance.csv").exists()

    def test_ising_mc_method(self, tmp_path):
        raw = minimal_raw("ising-averaged")
        raw["geometry"] = {"n": 11, "t": 4}
        raw["sampling"] = {"samples": 40, "method": "mc"}
        assert run_cli(tmp_path, raw) == EXIT_OK

    def test_scattering_summary_json(self, tmp_path):
        raw = minimal_raw("scattering")
        raw["sampling"] = {"samples": 100}
        assert run_cli(tmp_path, raw) == EXIT_OK
        summary = json.loads(
            (tmp_path / "out" / "scattering" / "scattering_summary.json").read_text()
        )
        assert summary["N"] == 8
        assert summary["xi_lower"] == pytest.approx(1.4118244954590442)
        assert summary["xi_upper"] == pytest.approx(1.4770774922754197)
        assert summary["xi_hat"] > 0
        header = (tmp_path / "out" / "scattering" / "scattering.csv").read_text().splitlines()[0]
        assert header == "n,mean_ln_T,stderr"

    def test_scattering_semion_reports_undecided(self, tmp_path):
        raw = minimal_raw("scattering")
        raw["scattering"]["N"] = 2
        raw["sampling"] = {"samples": 50}
        assert run_cli(tmp_path, raw) == EXIT_OK
        summary = json.loads(
            (tmp_path / "out" / "scattering" / "scattering_summary.json").read_text()
        )
        assert summary["xi_lower"] is None
        assert "semion" in summary["bounds_note"]

    def test_correlator_run(self, tmp_path):
        raw = minimal_raw("correlator")
        assert run_cli(tmp_path, raw) == EXIT_OK
        outdir = tmp_path / "out" / "correlator"
        rows = (outdir / "correlator.csv").read_text().splitlines()
        assert rows[0] == "t_prime,C"
        assert rows[1] == "0,1.0"
        assert rows[2] == "1,1.0"
        summary = json.loads((outdir / "manifest.json").read_text())["summary"]
        assert summary["pair_count"] > 0

    def test_schema_error_exit_code(self, tmp_path, capsys):
        raw = minimal_raw()
        raw["geometry"]["m"] = 5
        assert run_cli(tmp_path, raw) == EXIT_SCHEMA
        assert "schema error" in capsys.readouterr().err

    def test_guard_error_exit_code(self, tmp_path, capsys):
        raw = minimal_raw("ising-averaged")
        raw["geometry"] = {"n": 27, "t": 13}
        assert run_cli(tmp_path, raw) == EXIT_GUARD
        assert "guard limit" in capsys.readouterr().err

    def test_calibration_fault_exit_code(self, tmp_path, capsys, monkeypatch):
        # Restrict the candidate roots to one that fails the identity
        # calibration target; the run must abort with the numeric exit code.
        monkeypatch.setattr(
            anyonwalk.bracket,
            "CANDIDATE_ROOTS",
            (cmath.exp(-1j * math.pi / 8),),
        )
        raw = minimal_raw()
        assert run_cli(tmp_path, raw) == EXIT_NUMERIC
        assert "numerical invariant" in capsys.readouterr().err

    def test_output_dir_env_override(self, tmp_path, monkeypatch, capsys):
        envdir = tmp_path / "elsewhere"
        monkeypatch.setenv("ANYONWALK_OUTPUT_DIR", str(envdir))
        config_path = tmp_path / "config.toml"
        write_toml(config_path, minimal_raw())
        assert main(["run", "--config", str(config_path)]) == EXIT_OK
        assert (envdir / "abelian-fixed" / "manifest.json").exists()

    def test_label_controls_directory(self, tmp_path):
        raw = minimal_raw()
        raw["run"]["label"] = "trial-7"
        assert run_cli(tmp_path, raw) == EXIT_OK
        assert (tmp_path / "out" / "trial-7" / "manifest.json").exists()

    def test_plots_flag(self, tmp_path):
        raw = minimal_raw()
        raw["run"]["plots"] = False
        assert run_cli(tmp_path, raw) == EXIT_OK
        outdir = tmp_path / "out" / "abelian-fixed"
        assert not (outdir / "distribution.svg").exists()
        raw["run"]["plots"] = True
        raw["run"]["label"] = "plotted"
        assert run_cli(tmp_path, raw) == EXIT_OK
        assert (tmp_path / "out" / "plotted" / "distribution.svg").exists()

    def test_byte_determinism_across_worker_env(self, tmp_path, monkeypatch):
        raw = minimal_raw("abelian-averaged")
        raw["geometry"] = {"n": 21, "t": 10}
        raw["statistics"] = {"N": 8}
        raw["sampling"] = {"samples": 48, "method": "mc"}
        blobs = []
        for workers, label in (("1", "w1"), ("4", "w4")):
            monkeypatch.setenv("ANYONWALK_WORKERS", workers)
            raw["run"]["label"] = label
            assert run_cli(tmp_path, raw) == EXIT_OK
            blobs.append(
                (tmp_path / "out" / label / "distribution.csv").read_bytes()
            )
        assert blobs[0] == blobs[1]

    def test_identical_reruns_are_byte_identical(self, tmp_path):
        raw = minimal_raw("ising-averaged")
        raw["geometry"] = {"n": 13, "t": 5}
        digests = []
        for label in ("first", "second"):
            raw["run"]["label"] = label
            assert run_cli(tmp_path, raw) == EXIT_OK
            manifest = json.loads(
                (tmp_path / "out" / label / "manifest.json").read_text()
            )
            digests.append(manifest["outputs"]["distribution.csv"])
        assert digests[0] == digests[1]


class TestVerifySubcommand:
    def test_thirteen_named_checks(self):
        checks = verify_checks()
        names = [name for name, _ in checks]
        assert len(names) == 13
        assert len(set(names)) == 13
        assert all(callable(fn) for _, fn in checks)

    def test_verify_passes(self, capsys):
        assert main(["verify"]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.count("PASS") == 13
        assert "13/13 checks passed" in out

    def test_verify_failure_exit_code(self, capsys, monkeypatch):
        def broken():
            raise AssertionError("injected defect")

        monkeypatch.setattr(
            "anyonwalk.cli.verify_checks",
            lambda: [("always-green", lambda: None), ("always-red", broken)],
        )
        assert main(["verify"]) == EXIT_NUMERIC
        out = capsys.readouterr().out
        assert "FAIL" in out and "injected defect" in out
        assert "1/2 checks passed" in out


class TestBracketEvalSubcommand:
    def test_trefoil_word(self, capsys):
        assert main(["bracket-eval", "--word", "1 1 1"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "strands 2, crossings 3" in out
        tl_line = next(line for line in out.splitlines() if "bracket (TL)" in line)
        skein_line = next(line for line in out.splitlines() if "bracket (skein)" in line)
        # Both methods print the same value: -exp(i 3 pi / 8).
        expected = -cmath.exp(3j * math.pi / 8)
        for line in (tl_line, skein_line):
            number = line.split("=")[1].strip()
            value = complex(number.replace("i", "j").replace(" ", ""))
            assert abs(value - expected) < 1e-9

    def test_comma_separated_negative_generators(self, capsys):
        word = "1,-2,1,-2,1,-2"  # Borromean rings closure
        assert main(["bracket-eval", "--word", word]) == EXIT_OK
        out = capsys.readouterr().out
        trace_line = next(line for line in out.splitlines() if "markov trace" in line)
        value = complex(trace_line.split("=")[1].strip().replace("i", "j").replace(" ", ""))
        assert abs(value - (-1.0)) < 1e-9

    def test_explicit_strand_count(self, capsys):
        assert main(["bracket-eval", "--word", "1", "--strands", "4"]) == EXIT_OK
        assert "strands 4, crossings 1" in capsys.readouterr().out

    def test_bad_tokens(self, capsys):
        assert main(["bracket-eval", "--word", "1 x"]) == EXIT_SCHEMA
        assert main(["bracket-eval", "--word", "0"]) == EXIT_SCHEMA
        capsys.readouterr()


class TestRunConfigApi:
    def test_manifest_records_calibration(self, tmp_path):
        cfg = validate_config(minimal_raw())
        cfg["run"]["output_dir"] = str(tmp_path)
        manifest = run_config(cfg, tmp_path / "api")
        assert manifest.status == "completed"
        assert manifest.calibration["loop_value"] == pytest.approx(math.sqrt(2.0))
        root = manifest.calibration["root"]
        assert complex(root["re"], root["im"]) == pytest.approx(
            cmath.exp(3j * math.pi / 8)
        )
