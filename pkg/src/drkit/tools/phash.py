"""64-bit perceptual hashing for screenshot-change suppression.

Near-identical consecutive screenshots carry no new signal; when the hash
distance stays under the suppression threshold the browser observation
falls back to text only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct

RESAMPLE_SIZE = 32
HASH_SIZE = 8  # 8x8 low-frequency block -> 64 bits
DEFAULT_SUPPRESSION_DISTANCE = 10


@dataclass(frozen=True)
class PerceptualHash:
    bits: int  # 64-bit value

    def __post_init__(self) -> None:
        if not 0 <= self.bits < 2**64:
            raise ValueError("hash must fit in 64 bits")


def _resample(image: np.ndarray, size: int) -> np.ndarray:
    """Deterministic area-mean downsample to size x size."""
    rows = np.linspace(0, image.shape[0], size + 1).astype(int)
    cols = np.linspace(0, image.shape[1], size + 1).astype(int)
    out = np.empty((size, size), dtype=np.float64)
    for r in range(size):
        r0, r1 = rows[r], max(rows[r + 1], rows[r] + 1)
        for c in range(size):
            c0, c1 = cols[c], max(cols[c + 1], cols[c] + 1)
            out[r, c] = image[r0:r1, c0:c1].mean()
    return out


def phash64(image) -> PerceptualHash:
    """DCT hash: 32x32 downsample, 8x8 low-frequency block, median threshold."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("expected a nonempty 2-D grayscale raster")
    small = _resample(arr, RESAMPLE_SIZE)
    freq = dct(dct(small, axis=0, norm="ortho"), axis=1, norm="ortho")
    block = freq[:HASH_SIZE, :HASH_SIZE]
    median = np.median(block)
    bits = 0
    for value in block.flatten():
        bits = (bits << 1) | int(value > median)
    return PerceptualHash(bits=bits)


def hamming_distance(a: PerceptualHash, b: PerceptualHash) -> int:
    return bin(a.bits ^ b.bits).count("1")


def should_suppress_image(prev: PerceptualHash, cur: PerceptualHash, max_distance: int = DEFAULT_SUPPRESSION_DISTANCE) -> bool:
    """True when the screens are near-identical: Hamming(prev, cur) <= max_distance."""
    return hamming_distance(prev, cur) <= max_distance
