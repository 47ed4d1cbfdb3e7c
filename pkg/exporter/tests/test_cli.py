"""Command line behavior through the installed console script."""

import json

import pytest

from conftest import run_cli


def test_full_run_prints_summary(tree, tmp_path):
    out = tmp_path / "out"
    proc = run_cli(
        "--backbone", "toy-8", "--input", tree, "--out", out, "--quiet"
    )
    assert proc.returncode == 0, proc.stderr
    payload = json.loads(proc.stdout)
    assert payload["backbone"] == "toy-8"
    assert payload["dim"] == 8
    assert payload["rows"] == 10
    assert payload["weights"] == "random"
    assert payload["resize"].startswith("shortest edge 32")
    for name in payload["outputs"]:
        assert (out / name).exists()


def test_rerun_into_same_directory_is_byte_identical(tree, tmp_path):
    out = tmp_path / "out"
    args = ("--backbone", "toy-8", "--input", tree, "--out", out, "--quiet",
            "--replicas", "2", "--seed", "9")
    assert run_cli(*args).returncode == 0
    first = (out / "embeddings.pade").read_bytes()
    assert run_cli(*args).returncode == 0
    assert (out / "embeddings.pade").read_bytes() == first


def test_list_backbones(tree):
    proc = run_cli("--list-backbones")
    assert proc.returncode == 0
    lines = proc.stdout.splitlines()
    assert any(l.split() == ["dinov2-small", "384", "dinov2"] for l in lines)
    assert any(l.split() == ["clip-vit-l14", "768", "clip"] for l in lines)
    assert any(l.split() == ["resnet50", "2048", "cnn"] for l in lines)


@pytest.mark.parametrize(
    "args, fragment",
    [
        (("--backbone", "toy-8", "--out", "x"), "--input"),
        (("--backbone", "nope", "--input", ".", "--out", "x"), "unknown backbone"),
        (
            ("--backbone", "toy-8", "--input", ".", "--out", "x",
             "--replicas", "0"),
            "replicas must be at least 1",
        ),
        (
            ("--backbone", "toy-8", "--input", ".", "--out", "x",
             "--augment", "sharpen"),
            "invalid choice",
        ),
        (("--backbone", "toy-8", "--input", ".", "--out", "x", "--frob"), "--frob"),
    ],
)
def test_usage_errors_exit_1(args, fragment):
    proc = run_cli(*args)
    assert proc.returncode == 1
    assert fragment in proc.stderr
    assert proc.stderr.startswith("error: ")


def test_pretrained_mode_fails_cleanly_without_cache(tree, tmp_path, monkeypatch):
    monkeypatch.setenv("HF_HUB_OFFLINE", "1")
    proc = run_cli(
        "--backbone", "dinov2-small", "--input", tree, "--out", tmp_path / "o",
        "--weights", "pretrained", "--quiet",
    )
    if proc.returncode == 0:
        pytest.skip("pretrained checkpoint available locally")
    assert proc.returncode == 1
    assert "cannot obtain pretrained weights for dinov2-small" in proc.stderr


def test_skip_warning_reaches_stderr(tree, tmp_path):
    (tree / "attack" / "replay" / "train" / "img01.png").write_bytes(b"junk")
    proc = run_cli("--backbone", "toy-8", "--input", tree, "--out", tmp_path / "o")
    assert proc.returncode == 0
    assert "skipping unreadable image attack/replay/train/img01.png" in proc.stderr
    assert json.loads(proc.stdout)["skipped"] == ["attack/replay/train/img01.png"]


def test_quiet_suppresses_warnings(tree, tmp_path):
    (tree / "attack" / "replay" / "train" / "img01.png").write_bytes(b"junk")
    proc = run_cli(
        "--backbone", "toy-8", "--input", tree, "--out", tmp_path / "o", "--quiet"
    )
    assert proc.returncode == 0
    assert "skipping" not in proc.stderr


def test_layout_error_exit_1(tree, tmp_path):
    (tree / "spoof").mkdir()
    proc = run_cli(
        "--backbone", "toy-8", "--input", tree, "--out", tmp_path / "o", "--quiet"
    )
    assert proc.returncode == 1
    assert "unknown class directory 'spoof'" in proc.stderr


def test_module_entry_point_matches(tree, tmp_path):
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "embed_export.cli",
         "--backbone", "toy-8", "--input", str(tree),
         "--out", str(tmp_path / "o"), "--quiet"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["rows"] == 10
