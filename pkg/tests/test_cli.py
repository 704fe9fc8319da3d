import json

import pandas as pd
import pytest
import typer
from typer.testing import CliRunner

from src import __version__
from src.cli.app import app, parse_int_list

runner = CliRunner()


def test_parse_int_list():
    assert parse_int_list("0-2,5") == [0, 1, 2, 5]
    assert parse_int_list(" 7 ") == [7]
    with pytest.raises(typer.BadParameter):
        parse_int_list("a")
    with pytest.raises(typer.BadParameter):
        parse_int_list("5-2")
    with pytest.raises(typer.BadParameter):
        parse_int_list(",")


def test_version():
    result = runner.invoke(app, ["version"])
    assert result.exit_code == 0
    assert __version__ in result.stdout


def test_grad_check_machine_output():
    result = runner.invoke(app, ["grad-check", "--cases", "5", "--format", "machine"])
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["passed"] is True
    assert payload["cases"] == 5


def test_grad_check_failure_exit_code():
    result = runner.invoke(app, ["grad-check", "--cases", "3", "--tolerance", "0"])
    assert result.exit_code == 1


def test_grad_check_usage_error():
    result = runner.invoke(app, ["grad-check", "--cases", "0"])
    assert result.exit_code == 2


def test_missing_rate_machine(fixtures_dir):
    result = runner.invoke(app, [
        "missing-rate",
        str(fixtures_dir / "cooccurrence_annotations.json"),
        str(fixtures_dir / "cooccurrence_split.json"),
        "--base", "1,2", "--novel", "3,4", "--scope", "both", "--format", "machine",
    ])
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["fsod"][0]["missing_rate"] == pytest.approx(1 / 3)
    assert payload["gfsod"][0]["missing_rate"] == pytest.approx(0.6)


def test_missing_rate_default_novel_is_every_category(fixtures_dir):
    result = runner.invoke(app, [
        "missing-rate",
        str(fixtures_dir / "fig1c_annotations.json"),
        str(fixtures_dir / "fig1c_split.json"),
        "--format", "machine",
    ])
    assert result.exit_code == 0
    assert json.loads(result.stdout)["fsod"][0]["missing_rate"] == pytest.approx(2 / 3)


def test_missing_rate_csv_out(fixtures_dir, tmp_path):
    out = tmp_path / "rates.csv"
    result = runner.invoke(app, [
        "missing-rate",
        str(fixtures_dir / "cooccurrence_annotations.json"),
        str(fixtures_dir / "cooccurrence_split.json"),
        "--base", "1,2", "--per-category-images", "--scope", "gfsod", "--out", str(out),
    ])
    assert result.exit_code == 0
    frame = pd.read_csv(out)
    overall = frame[frame["category"] == "all"].iloc[0]
    assert overall["missing_rate"] == pytest.approx(7 / 13)
    assert set(frame["category"]) == {"person", "car", "dog", "cat", "all"}


def test_missing_rate_parse_error(tmp_path, fixtures_dir):
    bad = tmp_path / "bad.json"
    bad.write_text("{", encoding="utf-8")
    result = runner.invoke(app, ["missing-rate", str(bad), str(fixtures_dir / "fig1c_split.json")])
    assert result.exit_code == 3


def test_missing_rate_unknown_category(fixtures_dir):
    result = runner.invoke(app, [
        "missing-rate",
        str(fixtures_dir / "fig1c_annotations.json"),
        str(fixtures_dir / "fig1c_split.json"),
        "--novel", "9",
    ])
    assert result.exit_code == 3


def test_missing_rate_bad_id_list(fixtures_dir):
    result = runner.invoke(app, [
        "missing-rate",
        str(fixtures_dir / "fig1c_annotations.json"),
        str(fixtures_dir / "fig1c_split.json"),
        "--novel", "dog",
    ])
    assert result.exit_code == 2


def test_simulate_and_report(tmp_path):
    out = tmp_path / "sim.csv"
    result = runner.invoke(app, [
        "simulate", "--seeds", "0,1", "--shots", "1", "--classes", "3", "--scenes", "15",
        "--steps", "10", "--out", str(out),
    ])
    assert result.exit_code == 0
    frame = pd.read_csv(out)
    assert len(frame) == 4
    assert set(frame["loss"]) == {"ce", "dc"}

    manifest = tmp_path / "sim.manifest.json"
    assert manifest.exists()
    summary_out = tmp_path / "summary.csv"
    result = runner.invoke(app, ["report", str(manifest), "--out", str(summary_out)])
    assert result.exit_code == 0
    summary = pd.read_csv(summary_out)
    assert set(summary["seeds"]) == {2}


def test_simulate_machine_format(tmp_path):
    out = tmp_path / "sim.json"
    result = runner.invoke(app, [
        "simulate", "--seeds", "3", "--classes", "3", "--scenes", "10", "--steps", "5",
        "--loss", "dc", "--format", "machine", "--out", str(out),
    ])
    assert result.exit_code == 0
    payload = json.loads(out.read_text())
    assert [r["loss"] for r in payload["rows"]] == ["dc"]
    assert not (tmp_path / "sim.manifest.json").exists()


def test_simulate_invalid_configuration(tmp_path):
    result = runner.invoke(app, ["simulate", "--seeds", "0", "--classes", "1", "--out", str(tmp_path / "x.csv")])
    assert result.exit_code == 2


def test_report_bad_manifest(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("[]", encoding="utf-8")
    result = runner.invoke(app, ["report", str(bad)])
    assert result.exit_code == 3
