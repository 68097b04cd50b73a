from __future__ import annotations

import csv
import json
import shutil
import subprocess
import sys

import pytest

from conftest import corpus_paths
from percepthash import harness
from percepthash.attacks import AttackSpec, save_suite
from percepthash.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main

KEY = "3c" * 32


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    for path in corpus_paths()[:6]:
        shutil.copy(path, root / path.name)
    return root


def _lena():
    return next(p for p in corpus_paths() if p.stem == "lena")


def test_hash_same_file_twice(capsys):
    lena = str(_lena())
    assert main(["hash", lena, lena]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2 and lines[0] == lines[1]
    digest = lines[0].split()[0]
    assert digest.startswith("bdct-pca-v1:") and len(digest.split(":")[1]) == 160


def test_hash_to_file_and_spectral(tmp_path, capsys, monkeypatch):
    out = tmp_path / "h.txt"
    monkeypatch.setenv("PHASH_KEY", KEY)
    assert main(["hash", "--algorithm", "svd_dctpca", "--out", str(out), str(_lena())]) == EXIT_OK
    assert out.read_text().startswith("svd-dctpca-v1:")
    assert capsys.readouterr().out == ""


def test_hash_usage_errors(capsys, monkeypatch):
    monkeypatch.delenv("PHASH_KEY", raising=False)
    assert main(["hash"]) == EXIT_USAGE
    assert main(["hash", "--algorithm", "svd_dctpca", str(_lena())]) == EXIT_USAGE
    assert main(["hash", "--key", "abc", str(_lena())]) == EXIT_USAGE
    assert main(["bogus"]) == EXIT_USAGE
    assert main(["hash", "--algorithm", "md5", str(_lena())]) == EXIT_USAGE


def test_hash_partial_failure(tmp_path, capsys):
    bad = tmp_path / "broken.png"
    bad.write_bytes(b"nope")
    assert main(["hash", str(_lena()), str(bad), str(tmp_path / "missing.png")]) == EXIT_FAILURE
    captured = capsys.readouterr()
    assert len(captured.out.splitlines()) == 1
    assert "broken.png" in captured.err and "missing.png" in captured.err


def test_compare_images_and_hashes(capsys):
    paths = corpus_paths()
    assert main(["compare", str(paths[0]), str(paths[0])]) == EXIT_OK
    same = json.loads(capsys.readouterr().out)
    assert same == {"label": "same_content", "metric": "ber", "value": 0.0}
    main(["hash", str(paths[0]), str(paths[1])])
    h0, h1 = (line.split()[0] for line in capsys.readouterr().out.splitlines())
    assert main(["compare", "--hashes", h0, h1]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["value"] > 0.2
    assert main(["compare", "--hashes", h0, "junk"]) == EXIT_USAGE
    assert main(["compare", "--tau-low", "0.5", "--tau-high", "0.4", str(paths[0]), str(paths[0])]) == EXIT_USAGE


def test_robustness_report(small_corpus, tmp_path):
    out = tmp_path / "rob"
    assert main(["robustness", "--corpus", str(small_corpus), "--out", str(out),
                 "--deterministic", "--debug"]) == EXIT_OK
    report = json.loads((out / "robustness.json").read_text())
    assert report["report_version"] == 1
    assert "generated_at" not in report and "wall_clock_seconds" not in report
    assert len(report["attacks"]) == 17
    identity = report["attacks"][-1]
    assert identity["spec"] == {"kind": "contrast", "magnitude": 0.0} and identity["mean"] == 0.0
    assert all(0 <= v <= 1 for row in report["attacks"] for v in row["values"])
    assert report["attacks"][8]["spec"] == {"kind": "gaussian_noise", "magnitude": 5.0, "seed": 0}
    with (out / "robustness.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 17 and rows[0]["operation"] == "contrast(-0.3)"


def test_reports_deterministic_across_workers(small_corpus, tmp_path):
    for cmd in ("robustness", "discrimination", "tamper"):
        texts = []
        for workers in (1, 3):
            out = tmp_path / f"{cmd}{workers}"
            assert main([cmd, "--corpus", str(small_corpus), "--out", str(out), "--deterministic",
                         "--workers", str(workers)]) == EXIT_OK
            texts.append((out / f"{cmd}.json").read_bytes())
        assert texts[0] == texts[1]


def test_timestamps_without_deterministic(small_corpus, tmp_path):
    assert main(["tamper", "--corpus", str(small_corpus), "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "tamper.json").read_text())
    assert "generated_at" in report and report["wall_clock_seconds"] >= 0


def test_discrimination_outputs(small_corpus, tmp_path):
    assert main(["discrimination", "--corpus", str(small_corpus), "--out", str(tmp_path),
                 "--deterministic"]) == EXIT_OK
    report = json.loads((tmp_path / "discrimination.json").read_text())
    assert report["discrimination"]["count"] == 15 and len(report["pairs"]) == 15
    with (tmp_path / "discrimination_hist.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 50
    assert rows[0]["bin_center"] == "0.01" and rows[-1]["bin_center"] == "0.99"
    assert sum(int(r["count"]) for r in rows) == 15


def test_tamper_controls(small_corpus, tmp_path):
    assert main(["tamper", "--corpus", str(small_corpus), "--out", str(tmp_path),
                 "--deterministic"]) == EXIT_OK
    report = json.loads((tmp_path / "tamper.json").read_text())
    assert report["attack"] == {"kind": "logo", "magnitude": 0.1}
    for rec in report["tamper"]:
        assert rec["control_self"] == {"label": "same_content", "ber": 0.0, "thresholds": [0.2, 0.46]}
        assert rec["control_distinct"]["other"] != rec["image"]
    lines = (tmp_path / "tamper.csv").read_text().splitlines()
    assert lines[0] == "image,value,label" and len(lines) == 7


def test_custom_suite_and_spectral(small_corpus, tmp_path):
    suite = tmp_path / "attacks.json"
    save_suite([AttackSpec("jpeg", 50)], suite)
    assert main(["robustness", "--corpus", str(small_corpus), "--suite", str(suite),
                 "--algorithm", "svd_dctpca", "--key", KEY, "--out", str(tmp_path / "r"),
                 "--deterministic"]) == EXIT_OK
    report = json.loads((tmp_path / "r" / "robustness.json").read_text())
    assert report["metric"] == "spectral_distance"
    assert report["config"]["key_fingerprint"] and KEY not in json.dumps(report)
    assert [r["spec"] for r in report["attacks"]] == [{"kind": "jpeg", "magnitude": 50.0}]


def test_corpus_errors(tmp_path):
    assert main(["robustness", "--corpus", str(tmp_path / "nope"), "--out", str(tmp_path)]) == EXIT_FAILURE
    one = tmp_path / "one"
    one.mkdir()
    shutil.copy(_lena(), one / "lena.png")
    assert main(["discrimination", "--corpus", str(one), "--out", str(tmp_path)]) == EXIT_FAILURE
    assert main(["tamper", "--corpus", str(one), "--out", str(tmp_path), "--workers", "0"]) == EXIT_USAGE
    (one / "bad.png").write_bytes(b"x")
    assert main(["tamper", "--corpus", str(one), "--out", str(tmp_path)]) == EXIT_FAILURE


def test_run_config_validation(tmp_path):
    with pytest.raises(ValueError):
        harness.RunConfig(tmp_path, algorithm="svd_dctpca")
    with pytest.raises(ValueError):
        harness.RunConfig(tmp_path, thresholds=(0.5, 0.2))
    with pytest.raises(ValueError):
        harness.RunConfig(tmp_path, workers=0)


def test_console_script_exit_code():
    proc = subprocess.run([sys.executable, "-m", "percepthash.cli", "hash"], capture_output=True, text=True)
    assert proc.returncode == EXIT_USAGE
    assert "no input images" in proc.stderr
