"""Keyed, reproducible pseudo-randomness.

Every key-dependent choice in the hashing pipelines (rectangle placement,
tile permutations) is drawn from a ChaCha20 keystream so that results are
bit-identical across platforms and languages.  Independent sub-streams are
obtained from a single key by hashing a short domain tag into the nonce.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms

KEY_BYTES = 32
KEY_ENV_VAR = "PHASH_KEY"

_CHUNK = 4096  # keystream bytes generated per refill; multiple of the 64-byte block


@dataclass(frozen=True)
class Key:
    """A 32-byte secret seed."""

    seed: bytes = field(repr=False)

    def __post_init__(self) -> None:
        if not isinstance(self.seed, (bytes, bytearray)) or len(self.seed) != KEY_BYTES:
            raise ValueError(f"key must be exactly {KEY_BYTES} bytes")
        object.__setattr__(self, "seed", bytes(self.seed))

    @classmethod
    def from_hex(cls, text: str) -> "Key":
        text = text.strip().lower()
        if text.startswith("0x"):
            text = text[2:]
        if len(text) != 2 * KEY_BYTES:
            raise ValueError(f"key must be {2 * KEY_BYTES} hex characters, got {len(text)}")
        try:
            return cls(bytes.fromhex(text))
        except ValueError as exc:
            raise ValueError(f"invalid hex key: {exc}") from None

    @classmethod
    def from_env(cls, var: str = KEY_ENV_VAR) -> "Key | None":
        value = os.environ.get(var)
        return cls.from_hex(value) if value else None

    def hex(self) -> str:
        return self.seed.hex()


def _tag_nonce(tag: str) -> bytes:
    return hashlib.sha256(b"percepthash/prng/" + tag.encode("utf-8")).digest()[:12]


class RandStream:
    """Sequential reader over the ChaCha20 keystream for ``(key, domain_tag)``.

    The stream starts at block counter 0.  ``counter`` is the number of
    keystream bytes consumed so far.  A stream is single-owner: create
    separate streams (distinct tags) for concurrent consumers.
    """

    def __init__(self, key: Key, domain_tag: str):
        if not domain_tag:
            raise ValueError("domain_tag must be a non-empty string")
        self.key = key
        self.domain_tag = domain_tag
        self._nonce = _tag_nonce(domain_tag)
        self.reset()

    def reset(self) -> None:
        """Rewind to the start of the stream."""
        cipher = Cipher(algorithms.ChaCha20(self.key.seed, bytes(4) + self._nonce), mode=None)
        self._encryptor = cipher.encryptor()
        self._buffer = b""
        self._pos = 0
        self.counter = 0

    def read(self, n: int) -> bytes:
        if n < 0:
            raise ValueError("cannot read a negative number of bytes")
        out = bytearray()
        while len(out) < n:
            if self._pos == len(self._buffer):
                self._buffer = self._encryptor.update(bytes(_CHUNK))
                self._pos = 0
            take = min(n - len(out), len(self._buffer) - self._pos)
            out += self._buffer[self._pos:self._pos + take]
            self._pos += take
        self.counter += n
        return bytes(out)

    def next_u64(self) -> int:
        return int.from_bytes(self.read(8), "little")

    def __repr__(self) -> str:
        return f"RandStream(domain_tag={self.domain_tag!r}, counter={self.counter})"


def next_uniform_int(stream: RandStream, upper_exclusive: int) -> int:
    """Unbiased integer in ``[0, upper_exclusive)`` by rejection sampling on 64-bit words."""
    if upper_exclusive < 1:
        raise ValueError(f"upper_exclusive must be >= 1, got {upper_exclusive}")
    if upper_exclusive == 1:
        return 0
    # largest multiple of upper_exclusive that fits in 64 bits
    limit = (1 << 64) - ((1 << 64) % upper_exclusive)
    while True:
        word = stream.next_u64()
        if word < limit:
            return word % upper_exclusive


def sample_rectangles(stream: RandStream, image_h: int, image_w: int, count: int,
                      rect_h: int, rect_w: int) -> list[tuple[int, int]]:
    """Draw ``count`` (top, left) corners of rect_h x rect_w windows inside the image.

    Each rectangle takes two draws, top then left.  Overlap is allowed.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if rect_h < 1 or rect_w < 1:
        raise ValueError("rectangle dimensions must be positive")
    if rect_h > image_h or rect_w > image_w:
        raise ValueError(
            f"rectangle {rect_h}x{rect_w} does not fit in image {image_h}x{image_w}")
    positions = []
    for _ in range(count):
        top = next_uniform_int(stream, image_h - rect_h + 1)
        left = next_uniform_int(stream, image_w - rect_w + 1)
        positions.append((top, left))
    return positions


def permutation(stream: RandStream, n: int) -> list[int]:
    """Fisher-Yates shuffle of ``range(n)``."""
    items = list(range(n))
    for i in range(n - 1, 0, -1):
        j = next_uniform_int(stream, i + 1)
        items[i], items[j] = items[j], items[i]
    return items
