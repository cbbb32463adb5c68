"""Binary PPM (P6) reader/writer and the in-memory RGB image type.

Only the binary flavor with a maxval of 255 is supported.  The writer always
emits the canonical header ``P6\\n<width> <height>\\n255\\n`` followed by raw
row-major RGB bytes, so equal images serialize to identical byte sequences.
The reader additionally accepts ``#`` comments between header tokens, which
common tooling inserts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, FormatError

__all__ = ["RgbImage", "read_ppm", "write_ppm"]

_WHITESPACE = b" \t\r\n\v\f"


@dataclass(eq=False)
class RgbImage:
    """A width x height grid of 8-bit-per-channel RGB pixels.

    ``pixels`` has shape ``(height, width, 3)`` and dtype uint8; it is marked
    read-only so images can be shared freely between threads.
    """

    pixels: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ContractError(f"pixel array must have shape (h, w, 3), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ContractError(f"image dimensions must be at least 1x1, got {arr.shape[1]}x{arr.shape[0]}")
        if arr.dtype != np.uint8:
            if np.issubdtype(arr.dtype, np.integer) and arr.min() >= 0 and arr.max() <= 255:
                arr = arr.astype(np.uint8)
            else:
                raise ContractError(f"channel values must be integers in [0, 255], got dtype {arr.dtype}")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        self.pixels = arr

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RgbImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __repr__(self) -> str:
        return f"RgbImage({self.width}x{self.height})"


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Return the next header token and the position just past it.

    Skips whitespace and ``#`` comments (which run to end of line).
    """
    n = len(data)
    while pos < n:
        if data[pos : pos + 1] in _WHITESPACE:
            pos += 1
        elif data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in b"\r\n":
                pos += 1
        else:
            break
    if pos >= n:
        raise FormatError("truncated header: ran out of bytes while reading tokens")
    start = pos
    while pos < n and data[pos : pos + 1] not in _WHITESPACE and data[pos : pos + 1] != b"#":
        pos += 1
    return data[start:pos], pos


def _parse_dimension(token: bytes, name: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise FormatError(f"bad {name} token {token!r}") from None
    if value < 1:
        raise FormatError(f"{name} must be at least 1, got token {token!r}")
    return value


def read_ppm(data: bytes) -> RgbImage:
    """Parse a binary PPM (magic ``P6``, maxval 255) into an :class:`RgbImage`.

    Raises :class:`FormatError` naming the first offending header token or
    byte offset on malformed input.
    """
    magic, pos = _next_token(data, 0)
    if magic != b"P6":
        raise FormatError(f"bad magic {magic!r}, expected b'P6'")
    width_tok, pos = _next_token(data, pos)
    width = _parse_dimension(width_tok, "width")
    height_tok, pos = _next_token(data, pos)
    height = _parse_dimension(height_tok, "height")
    maxval_tok, pos = _next_token(data, pos)
    if maxval_tok != b"255":
        raise FormatError(f"unsupported maxval token {maxval_tok!r}, only 255 is supported")
    # Exactly one whitespace byte separates the maxval from the payload.
    if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
        raise FormatError(f"expected whitespace after maxval at offset {pos}")
    pos += 1
    payload = data[pos:]
    expected = width * height * 3
    if len(payload) < expected:
        raise FormatError(
            f"truncated payload: expected {expected} bytes, got {len(payload)} (payload starts at offset {pos})"
        )
    if len(payload) > expected:
        raise FormatError(
            f"trailing data: expected exactly {expected} payload bytes, got {len(payload)} (offset {pos + expected})"
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return RgbImage(pixels)


def write_ppm(img: RgbImage) -> bytes:
    """Serialize an image as canonical binary PPM.

    Output is byte-identical for equal images: header plus exactly
    ``3 * width * height`` payload bytes.
    """
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()
