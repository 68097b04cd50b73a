"""Perceptual image hashing: a 640-bit block-DCT/PCA hash and a keyed spectral hash."""

__version__ = "0.1.0"

from .blockhash import BitHash, hash_image  # noqa: E402
from .imageio_prep import LumaImage, decode, load  # noqa: E402
from .metrics import ber, classify  # noqa: E402
from .prng import Key  # noqa: E402
from .spectral import SpectralHash, SpectralParams, hash_spectral, spectral_distance  # noqa: E402

__all__ = [
    "BitHash", "Key", "LumaImage", "SpectralHash", "SpectralParams", "__version__", "ber",
    "classify", "decode", "hash_image", "hash_spectral", "load", "spectral_distance",
]
