"""Palette codec: k-means color quantization and the PQF1 container format.

An image is compressed by clustering its pixels in RGB space into ``mu``
colors and storing one palette index per pixel at ``gamma = ceil(log2(mu))``
bits.  The analytic compression ratio against 24-bit RGB is

    ratio = 24 * w * h / (mu * 24 + w * h * gamma)

PQF1 layout (all integers big-endian):

    offset  size        field
    0       4           magic "PQF1"
    4       4           width  (u32)
    8       4           height (u32)
    12      2           mu     (u16)
    14      3 * mu      palette, RGB triples
    ...     ceil(w*h*gamma / 8)   indices, packed MSB-first, zero-padded
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from . import kmeans
from .errors import ContractError, FormatError, InfeasibleError
from .image_io import RgbImage

__all__ = [
    "QuantizedImage",
    "index_bits",
    "encode",
    "decode",
    "serialize",
    "deserialize",
    "compression_ratio",
]

MAGIC = b"PQF1"
HEADER_SIZE = 14
COLOR_DEPTH_BITS = 24
MU_MIN, MU_MAX = 2, 256


def index_bits(mu: int) -> int:
    """Bits needed for one palette index: ceil(log2(mu))."""
    if mu < 2:
        raise ContractError(f"palette size must be at least 2, got {mu}")
    return (mu - 1).bit_length()


@dataclass(eq=False)
class QuantizedImage:
    """Palette of ``mu`` RGB colors plus a per-pixel index map.

    ``palette`` has shape ``(mu, 3)`` uint8; ``indices`` has shape
    ``(height, width)`` with values in ``[0, mu)``.
    """

    palette: np.ndarray
    indices: np.ndarray

    def __post_init__(self) -> None:
        pal = np.asarray(self.palette, dtype=np.uint8)
        if pal.ndim != 2 or pal.shape[1] != 3:
            raise ContractError(f"palette must have shape (mu, 3), got {pal.shape}")
        if not 2 <= len(pal) <= 256:
            raise ContractError(f"palette size must be in [2, 256], got {len(pal)}")
        idx = np.asarray(self.indices)
        if idx.ndim != 2 or idx.shape[0] < 1 or idx.shape[1] < 1:
            raise ContractError(f"indices must be a nonempty (h, w) array, got shape {idx.shape}")
        if idx.min() < 0 or idx.max() >= len(pal):
            raise ContractError(f"index out of range for palette of {len(pal)} colors")
        self.palette = pal
        self.indices = np.ascontiguousarray(idx, dtype=np.uint16)

    @property
    def width(self) -> int:
        return self.indices.shape[1]

    @property
    def height(self) -> int:
        return self.indices.shape[0]

    @property
    def mu(self) -> int:
        return len(self.palette)

    @property
    def gamma(self) -> int:
        return index_bits(self.mu)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QuantizedImage):
            return NotImplemented
        return bool(np.array_equal(self.palette, other.palette)) and bool(
            np.array_equal(self.indices, other.indices)
        )


def distinct_colors(img: RgbImage) -> int:
    """Number of distinct RGB values in the image."""
    flat = img.pixels.reshape(-1, 3).astype(np.uint32)
    packed = (flat[:, 0] << 16) | (flat[:, 1] << 8) | flat[:, 2]
    return int(len(np.unique(packed)))


def encode(img: RgbImage, mu: int, kcfg: kmeans.KmeansConfig | None = None) -> QuantizedImage:
    """Quantize ``img`` to a ``mu``-color palette.

    Pixels are clustered in RGB space with k = mu; each pixel's index names
    its nearest cluster center and each palette entry is that cluster's mean
    color rounded to the nearest integer per channel.
    """
    if not 2 <= mu <= 256:
        raise ContractError(f"palette size must be in [2, 256], got {mu}")
    n_distinct = distinct_colors(img)
    if mu > n_distinct:
        raise InfeasibleError(f"palette size {mu} exceeds the image's {n_distinct} distinct colors")
    if kcfg is None:
        kcfg = kmeans.KmeansConfig(k=mu)
    elif kcfg.k != mu:
        kcfg = kmeans.KmeansConfig(
            k=mu, max_iterations=kcfg.max_iterations, tolerance=kcfg.tolerance, seed=kcfg.seed
        )
    points = img.pixels.reshape(-1, 3).astype(np.float64)
    clustering = kmeans.run(points, kcfg)
    palette = np.clip(np.rint(clustering.centers), 0, 255).astype(np.uint8)
    indices = clustering.membership.reshape(img.height, img.width)
    return QuantizedImage(palette=palette, indices=indices)


def decode(q: QuantizedImage) -> RgbImage:
    """Reconstruct the image by substituting each index with its palette color."""
    return RgbImage(q.palette[q.indices])


def compression_ratio(width: int, height: int, mu: int) -> float:
    """Original bit count over compressed bit count for the given geometry."""
    if width < 1 or height < 1:
        raise ContractError(f"dimensions must be positive, got {width}x{height}")
    original_bits = COLOR_DEPTH_BITS * width * height
    compressed_bits = mu * COLOR_DEPTH_BITS + width * height * index_bits(mu)
    return original_bits / compressed_bits


def serialize(q: QuantizedImage) -> bytes:
    """Emit the PQF1 byte representation (bit-exact, see module docstring)."""
    header = MAGIC + struct.pack(">IIH", q.width, q.height, q.mu)
    gamma = q.gamma
    flat = q.indices.reshape(-1).astype(np.uint8)
    # unpackbits yields 8 MSB-first bits per index; keep the low gamma bits.
    bits = np.unpackbits(flat[:, None], axis=1)[:, 8 - gamma :]
    packed = np.packbits(bits.reshape(-1))
    return header + q.palette.tobytes() + packed.tobytes()


def deserialize(data: bytes) -> QuantizedImage:
    """Parse PQF1 bytes; exact inverse of :func:`serialize`."""
    if len(data) < HEADER_SIZE:
        raise FormatError(f"truncated header: got {len(data)} bytes, need {HEADER_SIZE}")
    if data[:4] != MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    width, height, mu = struct.unpack(">IIH", data[4:HEADER_SIZE])
    if width < 1 or height < 1:
        raise FormatError(f"bad dimensions {width}x{height}")
    if not 2 <= mu <= 256:
        raise FormatError(f"palette size {mu} out of range [2, 256]")
    gamma = index_bits(mu)
    palette_end = HEADER_SIZE + 3 * mu
    n_pixels = width * height
    payload_len = math.ceil(n_pixels * gamma / 8)
    expected = palette_end + payload_len
    if len(data) != expected:
        raise FormatError(f"bad length: expected {expected} bytes, got {len(data)}")
    palette = np.frombuffer(data[HEADER_SIZE:palette_end], dtype=np.uint8).reshape(mu, 3)
    bits = np.unpackbits(np.frombuffer(data[palette_end:], dtype=np.uint8))
    used = n_pixels * gamma
    if bits[used:].any():
        raise FormatError("nonzero padding bits in index payload")
    weights = 1 << np.arange(gamma - 1, -1, -1, dtype=np.uint32)
    indices = bits[:used].reshape(n_pixels, gamma).astype(np.uint32) @ weights
    if indices.max(initial=0) >= mu:
        raise FormatError(f"palette index {int(indices.max())} out of range for mu={mu}")
    return QuantizedImage(palette=palette, indices=indices.reshape(height, width))
