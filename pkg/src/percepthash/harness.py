"""Corpus runners for the robustness, discrimination and tamper experiments.

Each runner returns a JSON-serialisable report dict and writes it, plus
CSV side files, into ``config.output_dir``.  Work is split per image and may
be spread over a process pool; results are always gathered in sorted path
order, so the worker count never changes report contents.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from itertools import combinations
from pathlib import Path

import numpy as np

from . import __version__
from . import attacks as attacks_mod
from .attacks import AttackSpec
from .blockhash import hash_image
from .imageio_prep import SUPPORTED_SUFFIXES, LumaImage, load
from .metrics import (TAU_HIGH, TAU_LOW, DistributionStats, classify, reference_pdf,
                      summarize)
from .metrics import ber as bit_error_rate
from .prng import Key
from .spectral import hash_spectral, spectral_distance

REPORT_VERSION = 1
ALGORITHMS = ("bdct_pca", "svd_dctpca")


class CorpusError(RuntimeError):
    """The corpus is missing, empty or too small for the requested run."""


@dataclass
class RunConfig:
    corpus_dir: Path
    key_hex: str | None = None
    algorithm: str = "bdct_pca"
    attack_suite: str = "table1"
    thresholds: tuple[float, float] = (TAU_LOW, TAU_HIGH)
    output_dir: Path = Path("phash-report")
    workers: int = 1
    deterministic: bool = False
    debug: bool = False
    logo_fraction: float = 0.1
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.corpus_dir = Path(self.corpus_dir)
        self.output_dir = Path(self.output_dir)
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        lo, hi = self.thresholds
        if not 0.0 <= lo < hi <= 1.0:
            raise ValueError(f"invalid thresholds {self.thresholds}")
        if self.algorithm == "svd_dctpca" and not self.key_hex:
            raise ValueError("svd_dctpca needs a key")
        if self.key_hex:
            Key.from_hex(self.key_hex)

    @property
    def key(self) -> Key | None:
        return Key.from_hex(self.key_hex) if self.key_hex else None

    def echo(self) -> dict:
        return {
            "corpus_dir": str(self.corpus_dir),
            "algorithm": self.algorithm,
            "attack_suite": self.attack_suite,
            "thresholds": list(self.thresholds),
            "key_fingerprint": _key_fingerprint(self.key_hex),
            "logo_fraction": self.logo_fraction,
        }


def _key_fingerprint(key_hex: str | None) -> str | None:
    if not key_hex:
        return None
    import hashlib
    return hashlib.sha256(bytes.fromhex(Key.from_hex(key_hex).hex())).hexdigest()[:16]


def list_corpus(corpus_dir) -> list[Path]:
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise CorpusError(f"corpus directory not found: {corpus_dir}")
    paths = sorted(p for p in corpus_dir.iterdir()
                   if p.is_file() and p.suffix.lower() in SUPPORTED_SUFFIXES)
    if not paths:
        raise CorpusError(f"no images in {corpus_dir}")
    return paths


def resolve_suite(name: str) -> list[AttackSpec]:
    if name == "table1":
        return attacks_mod.table1_suite()
    return attacks_mod.load_suite(name)


def compute_hash(img: LumaImage, algorithm: str, key_hex: str | None = None):
    if algorithm == "bdct_pca":
        return hash_image(img)
    return hash_spectral(img, Key.from_hex(key_hex))


def distance(a, b) -> float:
    """BER for bit hashes, spectral distance for spectral hashes."""
    if hasattr(a, "bits"):
        return bit_error_rate(a, b).ber
    return spectral_distance(a, b)


def metric_name(algorithm: str) -> str:
    return "ber" if algorithm == "bdct_pca" else "spectral_distance"


# --- per-image work units (top level so a process pool can pickle them) ---

def _robustness_unit(args):
    path, algorithm, key_hex, specs = args
    img = load(path)
    original = compute_hash(img, algorithm, key_hex)
    values = [distance(original, compute_hash(attacks_mod.apply(img, s), algorithm, key_hex))
              for s in specs]
    return str(original), values


def _hash_unit(args):
    path, algorithm, key_hex = args
    return compute_hash(load(path), algorithm, key_hex)


def _tamper_unit(args):
    path, algorithm, key_hex, fraction = args
    img = load(path)
    original = compute_hash(img, algorithm, key_hex)
    tampered = compute_hash(attacks_mod.apply(img, AttackSpec("logo", fraction)), algorithm, key_hex)
    return original, distance(original, tampered)


def _map(func, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [func(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, jobs))


# --- reports ---

def _base_report(command: str, config: RunConfig, paths) -> dict:
    return {
        "report_version": REPORT_VERSION,
        "tool": "percepthash",
        "tool_version": __version__,
        "command": command,
        "metric": metric_name(config.algorithm),
        "config": config.echo(),
        "images": [p.name for p in paths],
    }


def _finish(report: dict, config: RunConfig, started: float, name: str) -> dict:
    if not config.deterministic:
        report["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        report["wall_clock_seconds"] = round(time.perf_counter() - started, 3)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    path = config.output_dir / f"{name}.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return report


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def run_robustness(config: RunConfig) -> dict:
    started = time.perf_counter()
    paths = list_corpus(config.corpus_dir)
    specs = resolve_suite(config.attack_suite)
    if config.debug:
        specs = specs + [AttackSpec("contrast", 0.0)]
    jobs = [(p, config.algorithm, config.key_hex, specs) for p in paths]
    results = _map(_robustness_unit, jobs, config.workers)
    table = np.array([values for _, values in results])  # images x attacks
    rows = []
    for j, spec in enumerate(specs):
        col = table[:, j]
        rows.append({
            "label": spec.label,
            "spec": spec.to_dict(),
            "n": int(col.size),
            "mean": float(col.mean()),
            "min": float(col.min()),
            "max": float(col.max()),
            "values": [float(v) for v in col],
        })
    report = _base_report("robustness", config, paths)
    report["hashes"] = {p.name: h for p, (h, _) in zip(paths, results)}
    report["attacks"] = rows
    _write_csv(config.output_dir / "robustness.csv",
               ["operation", "kind", "magnitude", "mean", "min", "max", "n"],
               [[r["label"], r["spec"]["kind"], r["spec"]["magnitude"],
                 f"{r['mean']:.6f}", f"{r['min']:.6f}", f"{r['max']:.6f}", r["n"]] for r in rows])
    return _finish(report, config, started, "robustness")


def discrimination_histogram_rows(stats: DistributionStats):
    centers = DistributionStats.bin_centers()
    width = centers[1] - centers[0]
    pdf = reference_pdf(centers)
    return [[f"{c:.2f}", n, f"{d:.6f}", f"{d * width * stats.count:.4f}"]
            for c, n, d in zip(centers, stats.histogram, pdf)]


def run_discrimination(config: RunConfig) -> dict:
    started = time.perf_counter()
    paths = list_corpus(config.corpus_dir)
    if len(paths) < 2:
        raise CorpusError("discrimination needs at least two images")
    hashes = _map(_hash_unit, [(p, config.algorithm, config.key_hex) for p in paths], config.workers)
    pairs = []
    for (i, a), (j, b) in combinations(enumerate(hashes), 2):
        pairs.append((paths[i].name, paths[j].name, distance(a, b)))
    stats = summarize([d for _, _, d in pairs])
    lo, hi = config.thresholds
    verdicts = [classify(d, lo, hi).label for _, _, d in pairs]
    report = _base_report("discrimination", config, paths)
    report["hashes"] = {p.name: str(h) for p, h in zip(paths, hashes)}
    report["discrimination"] = stats.to_dict()
    report["distinct_fraction"] = verdicts.count("distinct") / len(verdicts)
    report["reference"] = {"mean": 0.5, "variance": 0.0009}
    report["pairs"] = [{"a": a, "b": b, "value": d} for a, b, d in pairs]
    _write_csv(config.output_dir / "discrimination_hist.csv",
               ["bin_center", "count", "reference_pdf", "reference_count"],
               discrimination_histogram_rows(stats))
    return _finish(report, config, started, "discrimination")


def run_tamper(config: RunConfig) -> dict:
    started = time.perf_counter()
    paths = list_corpus(config.corpus_dir)
    lo, hi = config.thresholds
    jobs = [(p, config.algorithm, config.key_hex, config.logo_fraction) for p in paths]
    results = _map(_tamper_unit, jobs, config.workers)
    records = []
    for i, (path, (original, value)) in enumerate(zip(paths, results)):
        record = {
            "image": path.name,
            "tampered": classify(value, lo, hi).to_dict(),
            "control_self": classify(distance(original, original), lo, hi).to_dict(),
        }
        if len(paths) > 1:
            other_path = paths[(i + 1) % len(paths)]
            other = results[(i + 1) % len(paths)][0]
            record["control_distinct"] = dict(classify(distance(original, other), lo, hi).to_dict(),
                                              other=other_path.name)
        records.append(record)
    labels = [r["tampered"]["label"] for r in records]
    report = _base_report("tamper", config, paths)
    report["attack"] = AttackSpec("logo", config.logo_fraction).to_dict()
    report["tamper"] = records
    report["summary"] = {
        "n": len(records),
        "tampered_fraction": labels.count("tampered") / len(labels),
        "same_content": labels.count("same_content"),
        "tampered": labels.count("tampered"),
        "distinct": labels.count("distinct"),
    }
    _write_csv(config.output_dir / "tamper.csv", ["image", "value", "label"],
               [[r["image"], f"{r['tampered']['ber']:.6f}", r["tampered"]["label"]] for r in records])
    return _finish(report, config, started, "tamper")
