"""Image and frame distortion metrics: MSE, PSNR, and per-frame error accounting.

Two mean-square conventions coexist and are both exposed:

* :func:`mse` sums the squared error over the 3 channels of a pixel and
  averages over pixel positions only.
* :func:`frame_mse` averages over all ``M = 3 * w * h`` channel samples.

They differ by exactly a factor of 3.  Canonical PSNR is
``20 * log10(255 / sqrt(mse))``; a published variant that divides the peak by
the MSE instead of its root is available behind ``PsnrFormula.MSE_VARIANT``
for auditing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ContractError
from .image_io import RgbImage

__all__ = [
    "PsnrFormula",
    "FrameMetrics",
    "mse",
    "psnr",
    "frame_error",
    "frame_mse",
    "frame_metrics",
    "format_db",
]

PEAK_VALUE = 255.0


class PsnrFormula(str, Enum):
    CANONICAL = "canonical"
    MSE_VARIANT = "paper-eq14"


def _check_dims(a: RgbImage, b: RgbImage) -> None:
    if (a.width, a.height) != (b.width, b.height):
        raise ContractError(
            f"dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def _diff(a: RgbImage, b: RgbImage) -> np.ndarray:
    _check_dims(a, b)
    return a.pixels.astype(np.int64) - b.pixels.astype(np.int64)


def mse(a: RgbImage, b: RgbImage) -> float:
    """Mean over pixel positions of the squared RGB distance."""
    d = _diff(a, b)
    return float((d * d).sum(axis=2).mean())


def psnr(a: RgbImage, b: RgbImage, formula: PsnrFormula = PsnrFormula.CANONICAL) -> float:
    """Peak signal-to-noise ratio in dB; ``math.inf`` when the images are equal."""
    m = mse(a, b)
    return psnr_from_mse(m, formula)


def psnr_from_mse(m: float, formula: PsnrFormula = PsnrFormula.CANONICAL) -> float:
    if m < 0:
        raise ContractError(f"mse must be nonnegative, got {m}")
    if m == 0:
        return math.inf
    formula = PsnrFormula(formula)
    if formula is PsnrFormula.MSE_VARIANT:
        return 20.0 * math.log10(PEAK_VALUE / m)
    return 20.0 * math.log10(PEAK_VALUE / math.sqrt(m))


def frame_error(received: RgbImage, original: RgbImage) -> float:
    """Signed total error: sum of (received - original) over all channel samples."""
    return float(_diff(received, original).sum())


def frame_mse(received: RgbImage, original: RgbImage) -> float:
    """Mean squared error over all ``M = 3 * w * h`` channel samples (mse / 3)."""
    d = _diff(received, original)
    return float((d * d).mean())


@dataclass(frozen=True)
class FrameMetrics:
    """Per-frame distortion record; ``psnr_db`` is ``inf`` iff ``mse`` is 0."""

    frame_index: int
    total_error: float
    mse: float
    psnr_db: float


def frame_metrics(received: RgbImage, original: RgbImage, frame_index: int = 0) -> FrameMetrics:
    """Bundle the per-sample error statistics for one frame.

    The PSNR here is derived from the per-sample MSE
    (``20 * log10(255 / sqrt(frame_mse))``), keeping the triple internally
    consistent.
    """
    d_n = frame_mse(received, original)
    return FrameMetrics(
        frame_index=frame_index,
        total_error=frame_error(received, original),
        mse=d_n,
        psnr_db=math.inf if d_n == 0 else 20.0 * math.log10(PEAK_VALUE / math.sqrt(d_n)),
    )


def format_db(value: float) -> str:
    """Render a dB value for CSV/wire use; lossless frames become ``"inf"``."""
    if math.isinf(value):
        return "inf"
    return format(value, ".10g")
