"""Smoke tests for the command-line interface."""

import os

import pytest

from liarspoker.cli import build_parser, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_enumerate_default(capsys):
    code, out = run_cli(capsys, "enumerate", "--config", "3x3x2")
    assert code == 0
    assert "27" in out and "10^7" in out


def test_enumerate_csv_all(capsys):
    code, out = run_cli(capsys, "enumerate", "--all", "--format", "csv")
    assert code == 0
    lines = [ln for ln in out.strip().splitlines() if ln]
    assert len(lines) == 13  # header plus 3 hand shapes x 4 player counts
    assert lines[0].count(",") >= 4


def test_probe_anchor_probabilities(capsys):
    code, out = run_cli(capsys, "probe", "--config", "3x3x3")
    assert code == 0
    # own count 0 and 3 at quantity 4 over six unseen digits
    assert "0.1001" in out
    assert "0.9122" in out


def test_train_eval_best_response_pipeline(tmp_path, capsys):
    out_dir = str(tmp_path / "run")
    code, out = run_cli(
        capsys, "train", "--config", "1x2x2", "--out", out_dir,
        "--steps", "4", "--trajectories", "8", "--hidden", "8",
        "--checkpoint-interval", "2", "--log-every", "2",
    )
    assert code == 0
    assert os.path.exists(os.path.join(out_dir, "ckpt_4.bin"))
    assert os.path.exists(os.path.join(out_dir, "metrics.tsv"))

    ckpt = os.path.join(out_dir, "ckpt_4.bin")
    code, out = run_cli(
        capsys, "eval", "--config", "1x2x2",
        "--agents", f"policy:{ckpt}", "random",
        "--hands", "40", "--report", "csv",
    )
    assert code == 0
    assert "policy" in out and "random" in out

    series_path = str(tmp_path / "series.tsv")
    code, out = run_cli(
        capsys, "best-response", "--checkpoint", ckpt,
        "--steps", "60", "--eval-every", "30", "--eval-rounds", "20",
        "--out", series_path,
    )
    assert code == 0
    assert "rolling mean" in out
    assert open(series_path).readline().startswith("step")


def test_eval_breakdown(capsys):
    code, out = run_cli(
        capsys, "eval", "--config", "3x3x2", "--agents", "baseline", "random",
        "--hands", "30", "--breakdown",
    )
    assert code == 0
    assert "hand-category breakdown" in out


def test_bad_config_rejected(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["enumerate", "--config", "3by3"])


def test_missing_subcommand_rejected():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
