"""Image decoding, luminance conversion and resampling."""

from __future__ import annotations

import io
from functools import lru_cache
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

STANDARD_SIZE = 64
MIN_SIDE = 8
SUPPORTED_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")

# ITU-R BT.601 luma weights
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class DecodeError(ValueError):
    """Raised when bytes cannot be decoded into an image."""


class LumaImage:
    """A luminance matrix with values in [0, 255], at least 8x8.

    Pixels are stored as a read-only float64 array; operations return new
    images rather than mutating.
    """

    __slots__ = ("pixels",)

    def __init__(self, pixels):
        arr = np.array(pixels, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"luminance image must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < MIN_SIDE or arr.shape[1] < MIN_SIDE:
            raise ValueError(f"image must be at least {MIN_SIDE}x{MIN_SIDE}, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 255.0:
            raise ValueError("pixel values must lie in [0, 255]")
        arr.setflags(write=False)
        self.pixels = arr

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def __eq__(self, other) -> bool:
        return isinstance(other, LumaImage) and np.array_equal(self.pixels, other.pixels)

    __hash__ = None

    def __repr__(self) -> str:
        return f"LumaImage({self.height}x{self.width})"


def _to_luma(img: Image.Image) -> np.ndarray:
    mode = img.mode
    if mode in ("L", "LA"):
        return np.asarray(img.getchannel(0), dtype=np.float64)
    if mode == "1":
        return np.asarray(img.convert("L"), dtype=np.float64)
    if mode in ("I;16", "I;16B", "I;16L", "I"):
        arr = np.asarray(img, dtype=np.float64)
        top = 65535.0 if arr.max() > 255 else 255.0
        return np.clip(arr * (255.0 / top), 0.0, 255.0)
    if mode == "F":
        return np.clip(np.asarray(img, dtype=np.float64), 0.0, 255.0)
    rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
    r, g, b = LUMA_WEIGHTS
    return r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]


def decode(data: bytes) -> LumaImage:
    """Decode PNG/JPEG/BMP bytes into a luminance image (BT.601 weights for colour)."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            img.load()
            fmt = img.format
            if fmt not in ("PNG", "JPEG", "BMP"):
                raise DecodeError(f"unsupported image format {fmt!r}; expected PNG, JPEG or BMP")
            return LumaImage(_to_luma(img))
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise DecodeError(f"cannot decode image: {exc}") from exc


def load(path) -> LumaImage:
    path = Path(path)
    if path.suffix.lower() not in SUPPORTED_SUFFIXES:
        raise DecodeError(f"{path}: unsupported extension {path.suffix!r}")
    try:
        return decode(path.read_bytes())
    except DecodeError as exc:
        raise DecodeError(f"{path}: {exc}") from None


def encode_png(img: LumaImage) -> bytes:
    """8-bit grayscale PNG of a luminance image (values rounded)."""
    buf = io.BytesIO()
    Image.fromarray(np.rint(img.pixels).astype(np.uint8), mode="L").save(buf, format="PNG")
    return buf.getvalue()


@lru_cache(maxsize=64)
def _axis_weights(n_in: int, n_out: int) -> np.ndarray:
    """n_out x n_in resampling matrix for one axis.

    Shrinking uses area averaging (exact pixel-overlap weights); enlarging
    uses bilinear interpolation with half-pixel centres and edge clamping.
    Rows sum to 1, so constants and the value range are preserved.
    """
    if n_in == n_out:
        w = np.eye(n_out)
    elif n_out < n_in:
        scale = n_in / n_out
        w = np.zeros((n_out, n_in))
        for i in range(n_out):
            lo, hi = i * scale, (i + 1) * scale
            for j in range(int(np.floor(lo)), min(int(np.ceil(hi)), n_in)):
                w[i, j] = min(hi, j + 1) - max(lo, j)
        w /= w.sum(axis=1, keepdims=True)
    else:
        scale = n_in / n_out
        src = (np.arange(n_out) + 0.5) * scale - 0.5
        src = np.clip(src, 0.0, n_in - 1)
        j0 = np.floor(src).astype(int)
        j1 = np.minimum(j0 + 1, n_in - 1)
        frac = src - j0
        w = np.zeros((n_out, n_in))
        rows = np.arange(n_out)
        np.add.at(w, (rows, j0), 1.0 - frac)
        np.add.at(w, (rows, j1), frac)
    w.setflags(write=False)
    return w


def resize(img: LumaImage, height: int, width: int) -> LumaImage:
    """Separable resample to ``height x width`` (area-average down, bilinear up)."""
    wr = _axis_weights(img.height, height)
    wc = _axis_weights(img.width, width)
    out = wr @ img.pixels @ wc.T
    return LumaImage(np.clip(out, 0.0, 255.0))


def standardize(img: LumaImage) -> LumaImage:
    """Warp directly to the 64x64 standard image (no aspect-ratio padding)."""
    if img.shape == (STANDARD_SIZE, STANDARD_SIZE):
        return img
    return resize(img, STANDARD_SIZE, STANDARD_SIZE)
