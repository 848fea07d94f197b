#!/usr/bin/env python3
"""Tests for config-driven runs, their manifests and the click CLI."""

import json
from fractions import Fraction

import pytest
from click.testing import CliRunner

from errors import ConfigError
from main import cli
from runner import Command, RunConfig, load_config, run
from streams import BlockStream
from utils.serialization import dumps, sha256_file, stream_to_rle
from utils.validation import validate_fraction, validate_prefixes, validate_word_text


def read_manifest(out):
    return json.loads((out / "manifest.json").read_text(encoding="utf-8"))


def run_data(data_dir, name, out, **overrides):
    config = load_config(str(data_dir / name), {"out": str(out), **overrides})
    return run(config), read_manifest(out)


class TestLoadConfig:
    """Reading and overriding run configs."""

    def test_file_and_overrides(self, data_dir, tmp_path):
        config = load_config(str(data_dir / "check-golden-mean.json"), {"out": str(tmp_path), "stages": None})
        assert config.command is Command.CHECK
        assert config.model == "golden-mean"
        assert config.out == tmp_path
        assert config.stages == 3

    def test_overrides_alone(self, tmp_path):
        config = load_config(None, {"command": "decompose", "model": "two-cycle", "out": str(tmp_path)})
        assert config.command is Command.DECOMPOSE

    def test_unknown_command(self):
        with pytest.raises(ConfigError, match="invalid run config"):
            load_config(None, {"command": "nope"})

    def test_extra_field(self):
        with pytest.raises(ConfigError, match="invalid run config"):
            load_config(None, {"command": "check", "colour": "blue"})

    def test_bad_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(str(path))

    def test_bad_command_params(self):
        config = RunConfig(command=Command.BETA_EXPAND, params={"depth": 0})
        with pytest.raises(ConfigError, match="invalid parameters for beta-expand: depth"):
            config.command_params()


class TestModelRuns:
    """check and decompose against the bundled configs."""

    def test_check_golden_mean(self, data_dir, tmp_path):
        status, manifest = run_data(data_dir, "check-golden-mean.json", tmp_path)
        assert status == 0
        assert manifest["status"] == "ok"
        assert manifest["summary"]["transitive"] is True
        assert manifest["summary"]["primitivity_index"] == 2
        assert manifest["summary"]["period"] == 1
        assert "numpy" in manifest["versions"]

    def test_outputs_are_hashed(self, data_dir, tmp_path):
        _, manifest = run_data(data_dir, "check-golden-mean.json", tmp_path)
        assert set(manifest["outputs"]) == {"model.json"}
        for name, digest in manifest["outputs"].items():
            assert sha256_file(tmp_path / name) == digest

    def test_identical_configs_give_identical_outputs(self, data_dir, tmp_path):
        _, first = run_data(data_dir, "decompose-period3.json", tmp_path / "a")
        _, second = run_data(data_dir, "decompose-period3.json", tmp_path / "b")
        assert first["outputs"] == second["outputs"]

    def test_decompose_period3(self, data_dir, tmp_path):
        status, manifest = run_data(data_dir, "decompose-period3.json", tmp_path)
        assert status == 0
        assert manifest["summary"]["period"] == 3
        assert manifest["summary"]["classes"] == [[0, 3], [1, 4], [2, 5]]
        assert manifest["invariants"]["partition"] is True

    def test_decompose_two_cycle(self, data_dir, tmp_path):
        status, manifest = run_data(data_dir, "decompose-two-cycle.json", tmp_path)
        assert status == 0
        assert manifest["summary"]["classes"] == [[0], [1]]
        assert json.loads((tmp_path / "classes.json").read_text())["classes"] == [[0], [1]]

    def test_decompose_needs_transition_system(self, tmp_path):
        config = load_config(None, {"command": "decompose", "model": "golden-beta", "out": str(tmp_path)})
        assert run(config) == 2
        manifest = read_manifest(tmp_path)
        assert manifest["status"] == "error"
        assert "transition systems" in manifest["error"]

    def test_unknown_preset(self, tmp_path):
        config = load_config(None, {"command": "check", "model": "full7", "out": str(tmp_path)})
        assert run(config) == 2
        assert "unknown model preset 'full7'" in read_manifest(tmp_path)["error"]

    def test_output_path_is_a_file(self, tmp_path):
        target = tmp_path / "taken"
        target.write_text("", encoding="utf-8")
        config = load_config(None, {"command": "check", "out": str(target)})
        assert run(config) == 2


class TestBetaRuns:
    """beta-expand against the golden-mean beta."""

    def test_golden_expansions(self, data_dir, tmp_path):
        status, manifest = run_data(data_dir, "beta-expand-golden.json", tmp_path)
        assert status == 0
        assert manifest["summary"]["expansions"] == 3
        assert manifest["invariants"]["reconstruction_checks"] == 3
        assert manifest["invariants"]["nested_inclusions"] == 2
        expansions = json.loads((tmp_path / "expansions.json").read_text(encoding="utf-8"))
        assert expansions[2]["digits"].startswith("1000")


class TestPairRuns:
    """analyze-pair on stream literals and stream files."""

    def test_eventually_equal_pair_is_refuted(self, data_dir, tmp_path):
        status, manifest = run_data(data_dir, "analyze-fixed-point-pair.json", tmp_path)
        assert status == 0
        assert manifest["summary"]["verdict"] == "refuted-at-horizon"
        assert manifest["invariants"]["density_chain"] is True
        assert {"report.json", "recurrence.json"} <= set(manifest["outputs"])

    def test_csv_format(self, data_dir, tmp_path):
        status, manifest = run_data(data_dir, "analyze-fixed-point-pair.json", tmp_path, format="csv")
        assert status == 0
        header = (tmp_path / "report.csv").read_text(encoding="utf-8").splitlines()[0]
        assert header == "pair,kind,stage,n,t,value,bound,passed"

    def test_stream_from_file(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text(dumps(stream_to_rle(BlockStream.periodic((0, 1), 2), 1, 10)), encoding="utf-8")
        config = load_config(None, {
            "command": "analyze-pair",
            "out": str(tmp_path / "out"),
            "horizon": 64,
            "params": {"x": {"file": str(path)}, "y": {"tail": "01"}},
        })
        assert run(config) == 0
        assert read_manifest(tmp_path / "out")["summary"]["verdict"] == "refuted-at-horizon"

    def test_past_needs_two_sided(self, tmp_path):
        config = load_config(None, {
            "command": "analyze-pair",
            "out": str(tmp_path),
            "params": {"x": {"past": "1", "tail": "0"}, "y": {"tail": "0"}},
        })
        assert run(config) == 2


class TestConstructionRuns:
    """The bundled construction configs, end to end."""

    def test_dc1_family(self, data_dir, tmp_path):
        status, manifest = run_data(data_dir, "construct-dc1.json", tmp_path)
        assert status == 0
        assert set(manifest["summary"]["verdicts"].values()) == {"DC1-witnessed"}

    def test_alpha_dc1_family(self, data_dir, tmp_path):
        status, manifest = run_data(data_dir, "construct-alpha-dc1.json", tmp_path)
        assert status == 0, manifest.get("error")
        verdicts = manifest["summary"]["verdicts"]
        assert verdicts
        assert set(verdicts.values()) == {"alpha-DC1-witnessed"}
        assert manifest["failures"] == []

    def test_polynomial_family(self, data_dir, tmp_path):
        status, manifest = run_data(data_dir, "construct-polynomial.json", tmp_path)
        assert status == 0, manifest.get("error")
        assert manifest["summary"]["verdicts"] == {"11111|22222": "alpha-DC1-witnessed"}
        assert manifest["invariants"]["polynomial_schedule"] == 40

    def test_level_set_family_tracks_and_oscillates(self, data_dir, tmp_path):
        status, manifest = run_data(data_dir, "construct-level-set.json", tmp_path)
        assert status == 0, manifest.get("error")
        tracking = json.loads((tmp_path / "tracking.json").read_text())
        assert tracking and all(row["passed"] for row in tracking)
        assert all(
            Fraction(row["distance"]) <= Fraction(row["bound"]) for row in tracking
        )
        assert set(manifest["summary"]["birkhoff"].values()) == {"irregular"}

    @pytest.mark.parametrize(
        "name, design",
        [
            ("construct-recurrence-banach.json", "banach-only"),
            ("construct-recurrence-upper.json", "upper-not-lower"),
        ],
    )
    def test_recurrence_designs(self, data_dir, tmp_path, name, design):
        status, manifest = run_data(data_dir, name, tmp_path)
        assert status == 0, manifest.get("error")
        assert manifest["summary"]["design"] == design
        profiles = json.loads((tmp_path / "recurrence.json").read_text())
        for profile in profiles.values():
            tail_upper = Fraction(profile["designed"]["tail_upper"])
            if design == "banach-only":
                assert tail_upper <= Fraction(1, 10)
            else:
                assert tail_upper >= Fraction(1, 2)


class TestConstructionErrors:
    """Member prefixes are checked before anything is built."""

    def test_prefix_alphabet(self, tmp_path):
        config = load_config(None, {
            "command": "construct-polynomial",
            "stages": 2,
            "out": str(tmp_path),
            "params": {"prefixes": ["13"]},
        })
        assert run(config) == 2
        assert "symbols 1 and 2" in read_manifest(tmp_path)["error"]

    def test_prefix_length(self, tmp_path):
        config = load_config(None, {
            "command": "construct-polynomial",
            "stages": 2,
            "out": str(tmp_path),
            "params": {"prefixes": ["1"]},
        })
        assert run(config) == 2
        assert "length 2" in read_manifest(tmp_path)["error"]


class TestReportRuns:
    """report re-reads a finished run and checks its hashes."""

    def test_intact_run(self, data_dir, tmp_path):
        source = tmp_path / "source"
        run_data(data_dir, "decompose-period3.json", source)
        config = load_config(None, {"command": "report", "out": str(tmp_path / "report"), "params": {"input": str(source)}})
        assert run(config) == 0
        manifest = read_manifest(tmp_path / "report")
        assert manifest["invariants"]["hashes_verified"] is True
        assert manifest["summary"]["source_command"] == "decompose"

    def test_changed_output(self, data_dir, tmp_path):
        source = tmp_path / "source"
        run_data(data_dir, "decompose-period3.json", source)
        (source / "classes.json").write_text("{}\n", encoding="utf-8")
        config = load_config(None, {"command": "report", "out": str(tmp_path / "report"), "params": {"input": str(source)}})
        assert run(config) == 5
        manifest = read_manifest(tmp_path / "report")
        assert manifest["status"] == "invariant-failure"
        assert manifest["failures"] == ["output classes.json is missing or changed"]

    def test_missing_manifest(self, tmp_path):
        config = load_config(None, {"command": "report", "out": str(tmp_path / "report"), "params": {"input": str(tmp_path)}})
        assert run(config) == 2


class TestValidation:
    """Argument validators shared by runs and tools."""

    def test_prefixes(self):
        assert validate_prefixes(["12", "21"], 2) == (True, "")
        assert validate_prefixes([], 2)[0] is False

    def test_word_text(self):
        assert validate_word_text("0110", 2) == (True, "")
        assert validate_word_text("", 2) == (True, "")
        assert validate_word_text("012", 2) == (False, "Symbol 2 is outside the alphabet of size 2")
        assert validate_word_text("10,11", 12) == (True, "")

    def test_fraction(self):
        assert validate_fraction("3/8", "t") == (True, "")
        assert validate_fraction("x", "t") == (False, "t must be a rational number, got 'x'")
        assert validate_fraction("-1", "t", positive=True)[0] is False


class TestCli:
    """The symdyn command group."""

    def test_check(self, tmp_path):
        result = CliRunner().invoke(cli, ["check", "golden-mean", "--out", str(tmp_path)])
        assert result.exit_code == 0
        assert "Run finished" in result.output
        assert read_manifest(tmp_path)["command"] == "check"

    def test_run_with_flag_overrides(self, data_dir, tmp_path):
        result = CliRunner().invoke(cli, [
            "run", "--config", str(data_dir / "check-golden-mean.json"),
            "--model", "two-cycle", "--out", str(tmp_path), "--seed", "3",
        ])
        assert result.exit_code == 0
        manifest = read_manifest(tmp_path)
        assert manifest["config"]["model"] == "two-cycle"
        assert manifest["config"]["rng_seed"] == 3
        assert manifest["summary"]["period"] == 2

    def test_beta_expand(self, tmp_path):
        result = CliRunner().invoke(cli, ["beta-expand", "(1 + sqrt(5)) / 2", "1/2", "--depth", "8", "--out", str(tmp_path)])
        assert result.exit_code == 0
        assert read_manifest(tmp_path)["config"]["params"]["depth"] == 8

    def test_config_error_exit_status(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"command": "check", "stages": 0}), encoding="utf-8")
        result = CliRunner().invoke(cli, ["run", "--config", str(path)])
        assert result.exit_code == 2
        assert "Error: invalid run config" in result.output

    def test_failed_run_exit_status(self, tmp_path):
        result = CliRunner().invoke(cli, ["decompose", "golden-beta", "--out", str(tmp_path)])
        assert result.exit_code == 2
        assert "Run failed with exit status 2" in result.output
