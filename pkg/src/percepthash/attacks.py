"""Content-preserving image operations and the logo tamper.

Each operation is described by an :class:`AttackSpec` so suites can be
stored as JSON and echoed verbatim into reports.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .imageio_prep import LumaImage, resize

KINDS = ("contrast", "median_filter", "jpeg", "gaussian_noise", "salt_pepper", "hist_eq",
         "laplace_sharpen", "rotate", "crop", "logo", "compose")

# magnitude used when a spec leaves it out
DEFAULT_MAGNITUDE = {
    "contrast": 0.0,
    "median_filter": 3.0,
    "jpeg": 10.0,
    "gaussian_noise": 5.0,
    "salt_pepper": 0.02,
    "hist_eq": 0.0,
    "laplace_sharpen": 0.0,
    "rotate": 0.0,
    "crop": 0.5,
    "logo": 0.1,
    "compose": 0.0,
}

LAPLACE_SHARPEN = np.array([[0.0, -1.0, 0.0], [-1.0, 5.0, -1.0], [0.0, -1.0, 0.0]])
LOGO_SIZE = 64


@dataclass(frozen=True)
class AttackSpec:
    """One image operation.

    Magnitudes per kind: contrast gain change alpha in [-0.5, 0.5];
    median_filter odd window size; jpeg degradation x in [0, 99] encoded at
    quality 100 - x; gaussian_noise sigma in gray levels; salt_pepper
    density; rotate degrees; crop kept fraction of the area; logo fraction
    of the area covered.  hist_eq, laplace_sharpen and compose ignore it.
    """

    kind: str
    magnitude: float | None = None
    seed: int | None = None
    steps: tuple["AttackSpec", ...] = field(default=())

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if self.magnitude is None:
            object.__setattr__(self, "magnitude", DEFAULT_MAGNITUDE[self.kind])
        object.__setattr__(self, "magnitude", float(self.magnitude))
        object.__setattr__(self, "steps", tuple(self.steps))
        if self.kind == "compose" and not self.steps:
            raise ValueError("compose needs at least one step")
        _check_range(self.kind, self.magnitude)

    @property
    def label(self) -> str:
        if self.kind == "compose":
            return "+".join(s.label for s in self.steps)
        if self.kind in ("hist_eq", "laplace_sharpen"):
            return self.kind
        return f"{self.kind}({self.magnitude:g})"

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "magnitude": self.magnitude}
        if self.seed is not None:
            out["seed"] = self.seed
        if self.steps:
            out["steps"] = [s.to_dict() for s in self.steps]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "AttackSpec":
        unknown = set(data) - {"kind", "magnitude", "seed", "steps"}
        if unknown:
            raise ValueError(f"unknown attack fields: {sorted(unknown)}")
        steps = tuple(cls.from_dict(s) for s in data.get("steps", ()))
        return cls(data["kind"], data.get("magnitude"), data.get("seed"), steps)


def _check_range(kind: str, mag: float) -> None:
    ok = {
        "contrast": -0.5 <= mag <= 0.5,
        "median_filter": mag >= 1 and mag == int(mag) and int(mag) % 2 == 1 and mag <= 15,
        "jpeg": 0 <= mag <= 99,
        "gaussian_noise": 0 <= mag <= 64,
        "salt_pepper": 0 <= mag <= 0.5,
        "rotate": -180 <= mag <= 180,
        "crop": 0 < mag <= 1,
        "logo": 0 < mag <= 1,
    }.get(kind, True)
    if not ok or not np.isfinite(mag):
        raise ValueError(f"magnitude {mag} out of range for {kind}")


def _rng(spec: AttackSpec) -> np.random.Generator:
    return np.random.default_rng(0 if spec.seed is None else spec.seed)


def _contrast(px, spec):
    return 128.0 + (1.0 + spec.magnitude) * (px - 128.0)


def _median(px, spec):
    return ndimage.median_filter(px, size=int(spec.magnitude), mode="nearest")


def _jpeg(px, spec):
    buf = io.BytesIO()
    quality = int(round(100 - spec.magnitude))
    Image.fromarray(np.rint(px).astype(np.uint8), mode="L").save(buf, format="JPEG", quality=quality)
    buf.seek(0)
    with Image.open(buf) as img:
        return np.asarray(img.convert("L"), dtype=np.float64)


def _gaussian(px, spec):
    return px + _rng(spec).normal(0.0, spec.magnitude, px.shape)


def _salt_pepper(px, spec):
    u = _rng(spec).random(px.shape)
    out = px.copy()
    half = spec.magnitude / 2.0
    out[u < half] = 0.0
    out[(u >= half) & (u < spec.magnitude)] = 255.0
    return out


def _hist_eq(px, spec):
    levels = np.rint(px).astype(np.int64)
    hist = np.bincount(levels.ravel(), minlength=256)
    cdf = np.cumsum(hist)
    cdf_min = cdf[hist > 0][0]
    total = levels.size
    if total == cdf_min:
        return px.copy()
    lut = np.rint((cdf - cdf_min) / (total - cdf_min) * 255.0)
    return lut[levels].astype(np.float64)


def _sharpen(px, spec):
    return ndimage.convolve(px, LAPLACE_SHARPEN, mode="nearest")


def _rotate(px, spec):
    if spec.magnitude == 0:
        return px.copy()
    return ndimage.rotate(px, spec.magnitude, reshape=False, order=1, mode="constant",
                          cval=0.0, prefilter=False)


def _crop(px, spec):
    h, w = px.shape
    scale = np.sqrt(spec.magnitude)
    ch = max(8, int(round(h * scale)))
    cw = max(8, int(round(w * scale)))
    top, left = (h - ch) // 2, (w - cw) // 2
    return px[top:top + ch, left:left + cw].copy()


def logo_tile() -> np.ndarray:
    """The 64x64 synthetic logo: dark "L" and ring glyphs on a light framed badge."""
    tile = np.full((LOGO_SIZE, LOGO_SIZE), 235.0)
    dark = 40.0
    tile[:3, :] = tile[-3:, :] = dark
    tile[:, :3] = tile[:, -3:] = dark
    tile[14:50, 12:18] = dark
    tile[44:50, 12:30] = dark
    yy, xx = np.mgrid[:LOGO_SIZE, :LOGO_SIZE] + 0.5
    radius = np.hypot(xx - 43, yy - 32)
    tile[(radius >= 8) & (radius < 13)] = dark
    return tile


def _logo(px, spec):
    h, w = px.shape
    side = int(round(np.sqrt(spec.magnitude * h * w)))
    side = max(1, min(side, h, w))
    if side >= 8:
        patch = resize(LumaImage(logo_tile()), side, side).pixels
    else:
        patch = np.full((side, side), 40.0)
    out = px.copy()
    out[:side, :side] = patch
    return out


_OPS = {
    "contrast": _contrast,
    "median_filter": _median,
    "jpeg": _jpeg,
    "gaussian_noise": _gaussian,
    "salt_pepper": _salt_pepper,
    "hist_eq": _hist_eq,
    "laplace_sharpen": _sharpen,
    "rotate": _rotate,
    "crop": _crop,
    "logo": _logo,
}


def apply(img: LumaImage, spec: AttackSpec) -> LumaImage:
    if spec.kind == "compose":
        for step in spec.steps:
            img = apply(img, step)
        return img
    if spec.kind == "contrast" and spec.magnitude == 0:
        return img
    out = _OPS[spec.kind](img.pixels, spec)
    return LumaImage(np.clip(out, 0.0, 255.0))


def table1_suite() -> list[AttackSpec]:
    """The 16 robustness operations in table order."""
    return [
        AttackSpec("contrast", -0.30),
        AttackSpec("contrast", -0.20),
        AttackSpec("contrast", 0.20),
        AttackSpec("contrast", 0.30),
        AttackSpec("median_filter", 3),
        AttackSpec("jpeg", 10),
        AttackSpec("jpeg", 20),
        AttackSpec("jpeg", 40),
        AttackSpec("gaussian_noise", 5, seed=0),
        AttackSpec("salt_pepper", 0.02, seed=0),
        AttackSpec("hist_eq"),
        AttackSpec("laplace_sharpen"),
        AttackSpec("rotate", -5),
        AttackSpec("rotate", -3),
        AttackSpec("rotate", 3),
        AttackSpec("rotate", 5),
    ]


def combined_attack(jpeg_quality: int = 5, crop_fraction: float = 0.5, angle: float = 20.0) -> AttackSpec:
    """Crop by area, rotate and JPEG-compress, applied in that order."""
    return AttackSpec("compose", steps=(
        AttackSpec("crop", crop_fraction),
        AttackSpec("rotate", angle),
        AttackSpec("jpeg", 100 - jpeg_quality),
    ))


def load_suite(path) -> list[AttackSpec]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = data.get("attacks")
    if not isinstance(data, list) or not data:
        raise ValueError(f"{path}: expected a non-empty list of attacks")
    return [AttackSpec.from_dict(item) for item in data]


def save_suite(specs, path) -> None:
    payload = {"attacks": [s.to_dict() for s in specs]}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
