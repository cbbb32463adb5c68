"""Shared fixtures: deterministic synthetic images and frame sequences."""

from __future__ import annotations

import numpy as np
import pytest

from palstream.image_io import RgbImage


def make_photo(seed: int, width: int = 96, height: int = 72, noise: float = 2.0) -> RgbImage:
    """Smooth multi-scale image, photographic in spirit.

    Channels are built from a shared luminance field plus two low-amplitude
    chroma fields, so colors cluster near the gray diagonal the way camera
    output does; mild noise keeps well over 128 distinct colors at the
    default geometry.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)

    def field(octaves: int, amplitude: float) -> np.ndarray:
        out = np.zeros_like(xx)
        for _ in range(octaves):
            fx, fy = rng.uniform(0.5, 3.0, size=2)
            px, py = rng.uniform(0, 2 * np.pi, size=2)
            out += (
                amplitude
                * np.sin(2 * np.pi * fx * xx / width + px)
                * np.cos(2 * np.pi * fy * yy / height + py)
            )
            amplitude *= 0.55
        return out

    luma = 128.0 + field(4, 70.0)
    cb = field(2, 18.0)
    cr = field(2, 18.0)
    stacked = np.stack(
        [luma + 1.4 * cr, luma - 0.7 * cr - 0.35 * cb, luma + 1.8 * cb], axis=2
    )
    stacked = stacked + rng.normal(0.0, noise, size=stacked.shape)
    return RgbImage(np.clip(np.rint(stacked), 0, 255).astype(np.uint8))


def make_frames(
    count: int, width: int = 48, height: int = 36, seed: int = 5, motion: bool = True
) -> list[RgbImage]:
    """Deterministic frame sequence; ``motion`` advances the pattern per frame."""
    rng = np.random.default_rng(seed)
    fx = rng.uniform(1.0, 2.0)
    fy = rng.uniform(1.0, 2.0)
    yy, xx = np.mgrid[0:height, 0:width]
    frames = []
    for i in range(count):
        shift = 2.0 * i if motion else 0.0
        r = 127.0 + 90.0 * np.sin(2 * np.pi * fx * (xx + shift) / width)
        g = 127.0 + 90.0 * np.cos(2 * np.pi * fy * (yy + shift) / height)
        b = 127.0 + 70.0 * np.sin(2 * np.pi * (xx + yy + 3.0 * shift) / (width + height))
        frames.append(
            RgbImage(np.clip(np.rint(np.stack([r, g, b], axis=2)), 0, 255).astype(np.uint8))
        )
    return frames


@pytest.fixture
def photo() -> RgbImage:
    return make_photo(11)


@pytest.fixture
def small_photo() -> RgbImage:
    return make_photo(23, width=48, height=36)
