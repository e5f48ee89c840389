import json

from click.testing import CliRunner

from holosim.cli import cli

from conftest import small_experiment


def _write(path, payload):
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def test_presets_are_listed():
    result = CliRunner().invoke(cli, ["presets"])
    assert result.exit_code == 0
    assert "fig2\tefficiency_sweep" in result.output
    assert "table1\tcontrast_eval" in result.output


def test_run_writes_results(tmp_path):
    config = _write(tmp_path / "run.json", small_experiment("single_run", methods=["dpac2", "sgd2"], solver={"iterations": 3}))
    out = tmp_path / "out"

    result = CliRunner().invoke(cli, ["run", str(config), "--out", str(out), "--workers", "1", "--seed", "5"])

    assert result.exit_code == 0, result.output
    assert "single_run: 2 row(s), 0 failed" in result.output
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["solver"]["rng_seed"] == 5
    assert summary["config"]["hardware"]["rng_seed"] == 5
    assert (out / "results.csv").exists()


def test_invalid_config_is_reported(tmp_path):
    config = _write(tmp_path / "bad.json", {"kind": "efficiency_sweep", "methods": ["dpac2"]})
    result = CliRunner().invoke(cli, ["run", str(config), "--out", str(tmp_path)])
    assert result.exit_code == 1
    assert "invalid experiment config" in result.output
    assert "sweep_values" in result.output


def test_config_or_preset_is_required(tmp_path):
    result = CliRunner().invoke(cli, ["run", "--out", str(tmp_path)])
    assert result.exit_code == 1
    assert "either a config file or a preset is required" in result.output


def test_missing_config_file(tmp_path):
    result = CliRunner().invoke(cli, ["run", str(tmp_path / "nope.json")])
    assert result.exit_code == 2


def test_unknown_preset_is_a_usage_error():
    result = CliRunner().invoke(cli, ["run", "--preset", "fig9"])
    assert result.exit_code == 2


def test_srgb_flag_overrides_the_config(tmp_path):
    config = _write(tmp_path / "run.json", small_experiment("single_run", methods=["dpac2"], srgb=False))
    out = tmp_path / "out"

    result = CliRunner().invoke(cli, ["run", str(config), "--out", str(out), "--srgb"])

    assert result.exit_code == 0, result.output
    assert json.loads((out / "summary.json").read_text())["config"]["srgb"] is True
