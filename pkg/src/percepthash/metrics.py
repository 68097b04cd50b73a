"""Bit error rate, pairwise distribution statistics and the three-way verdict."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .blockhash import BitHash

HIST_BIN_WIDTH = 0.02
HIST_BINS = 50
TAU_LOW = 0.20
TAU_HIGH = 0.46
# reference distribution for distinct images
REFERENCE_MEAN = 0.5
REFERENCE_VARIANCE = 0.0009

SAME_CONTENT = "same_content"
TAMPERED = "tampered"
DISTINCT = "distinct"


@dataclass(frozen=True)
class BerValue:
    mismatches: int
    total_bits: int

    @property
    def ber(self) -> float:
        return self.mismatches / self.total_bits

    def __float__(self) -> float:
        return self.ber


def ber(a: BitHash, b: BitHash) -> BerValue:
    if a.algorithm_tag != b.algorithm_tag or a.version != b.version:
        raise ValueError(f"cannot compare {a.prefix} with {b.prefix}")
    if a.bits.size != b.bits.size:
        raise ValueError("hashes have different lengths")
    return BerValue(int(np.count_nonzero(a.bits != b.bits)), int(a.bits.size))


@dataclass(frozen=True)
class DistributionStats:
    count: int
    mean: float
    variance: float
    histogram: tuple[int, ...]

    @property
    def std(self) -> float:
        return float(np.sqrt(self.variance))

    @staticmethod
    def bin_centers() -> np.ndarray:
        return (np.arange(HIST_BINS) + 0.5) * HIST_BIN_WIDTH

    def to_dict(self) -> dict:
        return {"count": self.count, "mean": self.mean, "variance": self.variance,
                "std": self.std, "bin_width": HIST_BIN_WIDTH, "histogram": list(self.histogram)}


def histogram(values) -> tuple[int, ...]:
    """Counts over [0, 1] in 0.02-wide bins; 1.0 falls in the last bin."""
    vals = np.asarray(values, dtype=np.float64)
    idx = np.clip(np.floor(vals / HIST_BIN_WIDTH + 1e-9).astype(int), 0, HIST_BINS - 1)
    return tuple(int(c) for c in np.bincount(idx, minlength=HIST_BINS))


def summarize(values) -> DistributionStats:
    vals = np.asarray(values, dtype=np.float64)
    if vals.size == 0:
        raise ValueError("no values to summarize")
    var = float(vals.var(ddof=1)) if vals.size > 1 else 0.0
    return DistributionStats(int(vals.size), float(vals.mean()), var, histogram(vals))


def pairwise_bers(hashes) -> list[float]:
    hashes = list(hashes)
    return [ber(a, b).ber for a, b in combinations(hashes, 2)]


def pairwise_stats(hashes) -> DistributionStats:
    """Statistics over all C(n, 2) pairwise BERs."""
    hashes = list(hashes)
    if len(hashes) < 2:
        raise ValueError("pairwise_stats needs at least two hashes")
    return summarize(pairwise_bers(hashes))


@dataclass(frozen=True)
class Verdict:
    label: str
    ber: float
    thresholds: tuple[float, float]

    def to_dict(self) -> dict:
        return {"label": self.label, "ber": self.ber, "thresholds": list(self.thresholds)}


def classify(value: float, tau_low: float = TAU_LOW, tau_high: float = TAU_HIGH) -> Verdict:
    """same_content below tau_low, tampered up to tau_high, distinct beyond."""
    if not 0.0 <= tau_low < tau_high <= 1.0:
        raise ValueError(f"invalid thresholds ({tau_low}, {tau_high})")
    value = float(value)
    if value < tau_low:
        label = SAME_CONTENT
    elif value < tau_high:
        label = TAMPERED
    else:
        label = DISTINCT
    return Verdict(label, value, (tau_low, tau_high))


def reference_pdf(x, mean: float = REFERENCE_MEAN, variance: float = REFERENCE_VARIANCE) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-(x - mean) ** 2 / (2 * variance)) / np.sqrt(2 * np.pi * variance)
