"""Block-DCT + histogram + PCA binary perceptual hash (640 bits).

Pipeline: standardize to 64x64 -> 64 blocks of 8x8 -> per block an 8-bin
luminance histogram and the first 8 zigzag DCT coefficients (64x16 feature
matrix) -> per-image PCA down to 10 components (10x64 inter-feature) ->
each block column thresholded at its median.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imageio_prep import LumaImage, standardize
from .linalg import dct_matrix, median_of, pca_project

ALGORITHM_TAG = "bdct-pca"
ZSCORE_TAG = "bdct-pca-zscore"
VERSION = 1
HASH_BITS = 640

BLOCK = 8
BLOCKS_PER_SIDE = 8
N_BLOCKS = BLOCKS_PER_SIDE * BLOCKS_PER_SIDE
N_BINS = 8
N_COMPONENTS = 10

# JPEG zigzag order: DC then the 7 lowest AC frequencies, as (row, col)
ZIGZAG8 = ((0, 0), (0, 1), (1, 0), (2, 0), (1, 1), (0, 2), (0, 3), (1, 2))


@dataclass(frozen=True, eq=False)
class BitHash:
    bits: np.ndarray
    algorithm_tag: str = ALGORITHM_TAG
    version: int = VERSION

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits).astype(np.uint8).ravel()
        if bits.size != HASH_BITS:
            raise ValueError(f"BitHash must have {HASH_BITS} bits, got {bits.size}")
        if np.any(bits > 1):
            raise ValueError("bits must be 0 or 1")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def prefix(self) -> str:
        return f"{self.algorithm_tag}-v{self.version}"

    def to_hex(self) -> str:
        return np.packbits(self.bits).tobytes().hex()

    def __str__(self) -> str:
        return f"{self.prefix}:{self.to_hex()}"

    @classmethod
    def from_string(cls, text: str) -> "BitHash":
        prefix, sep, payload = text.strip().partition(":")
        tag = prefix.rsplit("-v", 1)[0]
        if not sep or tag not in (ALGORITHM_TAG, ZSCORE_TAG) or prefix != f"{tag}-v{VERSION}":
            raise ValueError(f"not a {ALGORITHM_TAG}-v{VERSION} hash: {text[:24]!r}")
        if len(payload) != HASH_BITS // 4:
            raise ValueError(f"expected {HASH_BITS // 4} hex characters, got {len(payload)}")
        raw = np.frombuffer(bytes.fromhex(payload), dtype=np.uint8)
        return cls(np.unpackbits(raw), algorithm_tag=tag)

    def __eq__(self, other) -> bool:
        return (isinstance(other, BitHash) and self.algorithm_tag == other.algorithm_tag
                and self.version == other.version and np.array_equal(self.bits, other.bits))

    def __hash__(self) -> int:
        return hash((self.algorithm_tag, self.version, self.bits.tobytes()))


def block_histogram(block) -> np.ndarray:
    """Counts of pixels per 32-level bin, ``floor(value / 32)`` for bins 0..7."""
    block = np.asarray(block, dtype=np.float64)
    bins = np.clip(np.floor(block / 32.0), 0, N_BINS - 1).astype(np.int64)
    return np.bincount(bins.ravel(), minlength=N_BINS)


def block_dct_features(block) -> np.ndarray:
    """DC plus 7 AC coefficients of the block's DCT in zigzag order."""
    block = np.asarray(block, dtype=np.float64)
    if block.shape != (BLOCK, BLOCK):
        raise ValueError(f"expected an {BLOCK}x{BLOCK} block, got {block.shape}")
    c = dct_matrix(BLOCK)
    coeffs = c @ block @ c.T
    return np.array([coeffs[r, s] for r, s in ZIGZAG8])


def _blocks(pixels: np.ndarray) -> np.ndarray:
    # (64, 8, 8) in raster order over the 8x8 block grid
    grid = pixels.reshape(BLOCKS_PER_SIDE, BLOCK, BLOCKS_PER_SIDE, BLOCK)
    return grid.transpose(0, 2, 1, 3).reshape(N_BLOCKS, BLOCK, BLOCK)


def extract_features(img: LumaImage) -> np.ndarray:
    """64x16 feature matrix: row b = histogram(8) ++ zigzag DCT(8) of block b."""
    pixels = img.pixels if isinstance(img, LumaImage) else np.asarray(img, dtype=np.float64)
    size = BLOCK * BLOCKS_PER_SIDE
    if pixels.shape != (size, size):
        raise ValueError(f"extract_features expects a {size}x{size} standardized image")
    blocks = _blocks(pixels)
    bins = np.clip(np.floor(blocks / 32.0), 0, N_BINS - 1).astype(np.int64)
    hist = np.stack([np.bincount(b.ravel(), minlength=N_BINS) for b in bins])
    c = dct_matrix(BLOCK)
    coeffs = c @ blocks @ c.T
    rows, cols = zip(*ZIGZAG8)
    dct = coeffs[:, list(rows), list(cols)]
    return np.hstack([hist.astype(np.float64), dct])


def inter_quantize(features, standardize_columns: bool = False) -> np.ndarray:
    """Compress the 64x16 feature matrix to the 10x64 inter-feature by PCA.

    Rows are principal components in descending explained variance, columns
    are blocks.  ``standardize_columns`` z-scores each feature column first
    (zero-variance columns become zero); it is off by default because it
    makes the hash far more sensitive to contrast changes.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (N_BLOCKS, N_BINS + len(ZIGZAG8)):
        raise ValueError(f"expected a 64x16 feature matrix, got {features.shape}")
    data = features
    if standardize_columns:
        centred = features - features.mean(axis=0)
        sd = features.std(axis=0, ddof=1)
        data = np.divide(centred, sd, out=np.zeros_like(centred), where=sd > 0)
    return pca_project(data, N_COMPONENTS).projected.T


def binarize(inter, algorithm_tag: str = ALGORITHM_TAG) -> BitHash:
    """Threshold each block column at its median (bit = value >= median), column-major."""
    inter = np.asarray(inter, dtype=np.float64)
    if inter.shape != (N_COMPONENTS, N_BLOCKS):
        raise ValueError(f"expected a 10x64 inter-feature matrix, got {inter.shape}")
    bits = np.empty_like(inter, dtype=np.uint8)
    for col in range(N_BLOCKS):
        mu = median_of(inter[:, col])
        bits[:, col] = inter[:, col] >= mu
    return BitHash(bits.T.ravel(), algorithm_tag=algorithm_tag)


def hash_image(img: LumaImage, standardize_columns: bool = False) -> BitHash:
    features = extract_features(standardize(img))
    tag = ZSCORE_TAG if standardize_columns else ALGORITHM_TAG
    return binarize(inter_quantize(features, standardize_columns), tag)
