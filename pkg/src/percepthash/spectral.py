"""Keyed two-stage DCT-PCA spectral hash.

Stage 1 draws p pseudo-random m x m rectangles from the image and keeps
the DCT coefficients of each in the square annulus f_min <= max(u, v) < f_max.
The p coefficient vectors are reshaped into 2-column tiles and assembled,
in a keyed order, into a secondary image J (256 x 400 with the defaults),
which is optionally smoothed.  The hash is the top singular vector pair
(u1, v1) of J.  ``mode="rectangles"`` instead draws r d x d windows from J
and concatenates their top singular vectors.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass

import numpy as np

from .imageio_prep import LumaImage, resize
from .linalg import dct_matrix, svd_truncated
from .prng import Key, RandStream, permutation, sample_rectangles

ALGORITHM_TAG = "svd-dctpca"
RECT_TAG = "svd-dctpca-rect"
VERSION = 1
UPSCALE_SIDE = 512

STAGE1_TAG = "stage1"
ASSEMBLE_TAG = "assemble"
STAGE2_TAG = "stage2"


@dataclass(frozen=True)
class SpectralParams:
    p: int = 200
    m: int = 256
    r: int = 200
    d: int = 150
    f_min: int = 8
    f_max: int = 24
    smooth: bool = True
    mode: str = "whole"

    def __post_init__(self) -> None:
        if self.p < 1 or self.r < 1:
            raise ValueError("rectangle counts p and r must be >= 1")
        if not 0 <= self.f_min < self.f_max <= self.m:
            raise ValueError("need 0 <= f_min < f_max <= m")
        if self.feature_length % 2:
            raise ValueError("f_max^2 - f_min^2 must be even to tile into 2-column blocks")
        if self.mode not in ("whole", "rectangles"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "rectangles" and self.d > min(self.secondary_shape):
            raise ValueError(f"d={self.d} does not fit in secondary image {self.secondary_shape}")

    @property
    def feature_length(self) -> int:
        return self.f_max ** 2 - self.f_min ** 2

    @property
    def secondary_shape(self) -> tuple[int, int]:
        return self.feature_length // 2, 2 * self.p


@dataclass(frozen=True, eq=False)
class SpectralHash:
    u1: np.ndarray
    v1: np.ndarray
    algorithm_tag: str = ALGORITHM_TAG
    version: int = VERSION

    def __post_init__(self) -> None:
        for name in ("u1", "v1"):
            vec = np.array(getattr(self, name), dtype=np.float64).ravel()
            vec.setflags(write=False)
            object.__setattr__(self, name, vec)

    def __str__(self) -> str:
        payload = self.u1.astype("<f8").tobytes() + self.v1.astype("<f8").tobytes()
        return f"{self.algorithm_tag}-v{self.version}:{base64.b64encode(payload).decode('ascii')}"

    @classmethod
    def from_string(cls, text: str, u_len: int | None = None) -> "SpectralHash":
        """Parse a serialized hash.  ``u_len`` defaults to 256 for whole-J hashes."""
        prefix, sep, payload = text.strip().partition(":")
        tag = prefix.rsplit("-v", 1)[0]
        if not sep or tag not in (ALGORITHM_TAG, RECT_TAG) or prefix != f"{tag}-v{VERSION}":
            raise ValueError(f"not a {ALGORITHM_TAG}-v{VERSION} hash: {text[:24]!r}")
        values = np.frombuffer(base64.b64decode(payload, validate=True), dtype="<f8")
        if u_len is None:
            u_len = values.size // 2 if tag == RECT_TAG else SpectralParams().secondary_shape[0]
        if not 0 < u_len < values.size:
            raise ValueError("payload too short for the requested vector lengths")
        return cls(values[:u_len].copy(), values[u_len:].copy(), algorithm_tag=tag)

    def __eq__(self, other) -> bool:
        return (isinstance(other, SpectralHash) and self.algorithm_tag == other.algorithm_tag
                and np.array_equal(self.u1, other.u1) and np.array_equal(self.v1, other.v1))

    def __hash__(self) -> int:
        return hash((self.algorithm_tag, self.u1.tobytes(), self.v1.tobytes()))


def annulus_mask(f_min: int, f_max: int) -> np.ndarray:
    """f_max x f_max boolean mask of frequencies with f_min <= max(u, v) < f_max."""
    u, v = np.meshgrid(np.arange(f_max), np.arange(f_max), indexing="ij")
    band = np.maximum(u, v)
    return band >= f_min


def _prepare(img: LumaImage, params: SpectralParams) -> LumaImage:
    if min(img.height, img.width) < params.m:
        side = max(UPSCALE_SIDE, params.m)
        img = resize(img, side, side)
    return img


def stage1_features(img: LumaImage, key: Key, params: SpectralParams = SpectralParams()) -> np.ndarray:
    """p x (f_max^2 - f_min^2) matrix of annulus DCT coefficients, one row per rectangle.

    Rows follow rectangle draw order; within a row the annulus is read row-major.
    """
    img = _prepare(img, params)
    stream = RandStream(key, STAGE1_TAG)
    corners = sample_rectangles(stream, img.height, img.width, params.p, params.m, params.m)
    # only the low f_max x f_max corner of each m x m DCT is needed
    basis = dct_matrix(params.m)[:params.f_max]
    mask = annulus_mask(params.f_min, params.f_max)
    pixels = img.pixels
    out = np.empty((params.p, params.feature_length))
    for i, (top, left) in enumerate(corners):
        window = pixels[top:top + params.m, left:left + params.m]
        out[i] = (basis @ window @ basis.T)[mask]
    return out


def _mean3x3(mat: np.ndarray) -> np.ndarray:
    padded = np.pad(mat, 1, mode="edge")
    rows, cols = mat.shape
    acc = np.zeros_like(mat)
    for dr in range(3):
        for dc in range(3):
            acc += padded[dr:dr + rows, dc:dc + cols]
    return acc / 9.0


def build_secondary(features, key: Key, params: SpectralParams = SpectralParams()) -> np.ndarray:
    """Assemble the secondary image J from the stage-1 vectors.

    Each vector becomes a (L/2) x 2 tile filled column-major; tile i is
    placed at slot perm[i] of a keyed permutation, left to right.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (params.p, params.feature_length):
        raise ValueError(
            f"expected {params.p} vectors of length {params.feature_length}, got {features.shape}")
    rows, cols = params.secondary_shape
    slots = permutation(RandStream(key, ASSEMBLE_TAG), params.p)
    secondary = np.empty((rows, cols))
    for i, vec in enumerate(features):
        s = slots[i]
        secondary[:, 2 * s:2 * s + 2] = vec.reshape(rows, 2, order="F")
    if params.smooth:
        secondary = _mean3x3(secondary)
    return secondary


def _hash_rectangles(secondary: np.ndarray, key: Key, params: SpectralParams) -> SpectralHash:
    stream = RandStream(key, STAGE2_TAG)
    corners = sample_rectangles(stream, *secondary.shape, params.r, params.d, params.d)
    us, vs = [], []
    for top, left in corners:
        res = svd_truncated(secondary[top:top + params.d, left:left + params.d], 1)
        us.append(res.u1)
        vs.append(res.v1)
    u = np.concatenate(us)
    v = np.concatenate(vs)
    return SpectralHash(u / np.linalg.norm(u), v / np.linalg.norm(v), algorithm_tag=RECT_TAG)


def hash_from_secondary(secondary, key: Key | None = None,
                        params: SpectralParams = SpectralParams()) -> SpectralHash:
    secondary = np.asarray(secondary, dtype=np.float64)
    if params.mode == "rectangles":
        if key is None:
            raise ValueError("rectangles mode needs a key")
        return _hash_rectangles(secondary, key, params)
    res = svd_truncated(secondary, 1)
    return SpectralHash(res.u1, res.v1)


def hash_spectral(img: LumaImage, key: Key, params: SpectralParams = SpectralParams()) -> SpectralHash:
    secondary = build_secondary(stage1_features(img, key, params), key, params)
    return hash_from_secondary(secondary, key, params)


def spectral_distance(a: SpectralHash, b: SpectralHash) -> float:
    """1 - mean absolute cosine of the paired singular vectors; 0 = identical."""
    if a.u1.shape != b.u1.shape or a.v1.shape != b.v1.shape:
        raise ValueError("spectral hashes have different vector lengths")

    def abs_cos(x, y):
        nx, ny = np.linalg.norm(x), np.linalg.norm(y)
        return 0.0 if nx == 0 or ny == 0 else abs(float(x @ y)) / (nx * ny)

    dist = 1.0 - (abs_cos(a.u1, b.u1) + abs_cos(a.v1, b.v1)) / 2.0
    return min(1.0, max(0.0, dist))
