"""Palette-based screen compression with bandwidth-adaptive palette sizing.

The toolkit covers the full loop: k-means color quantization and the PQF1
container (:mod:`palstream.codec`), distortion metrics
(:mod:`palstream.metrics`), fitting a linear palette-size model to historical
measurements (:mod:`palstream.regression`), the per-frame QoS decision
(:mod:`palstream.qos`), and a trace-driven stream replay
(:mod:`palstream.simulator`).  ``palstream.service`` exposes the same
operations over HTTP; the ``palstream`` CLI is a thin client for them.
"""

from . import codec, defaults, image_io, kmeans, metrics, qos, regression, simulator
from .codec import QuantizedImage, compression_ratio, decode, encode
from .errors import (
    CATEGORY_EXIT_CODES,
    ContractError,
    FormatError,
    InfeasibleError,
    NumericError,
    PalstreamError,
    ProfileError,
    SingularDesignError,
    TraceError,
)
from .image_io import RgbImage, read_ppm, write_ppm
from .kmeans import KmeansConfig
from .metrics import PsnrFormula, mse, psnr
from .qos import DeviceClass, DeviceProfile, EstimationTable, QosDecision, QosMode, decide
from .simulator import BandwidthTrace, LossPlan, StreamReport

__version__ = "0.1.0"

__all__ = [
    "codec",
    "defaults",
    "image_io",
    "kmeans",
    "metrics",
    "qos",
    "regression",
    "simulator",
    "QuantizedImage",
    "compression_ratio",
    "decode",
    "encode",
    "CATEGORY_EXIT_CODES",
    "ContractError",
    "FormatError",
    "InfeasibleError",
    "NumericError",
    "PalstreamError",
    "ProfileError",
    "SingularDesignError",
    "TraceError",
    "RgbImage",
    "read_ppm",
    "write_ppm",
    "KmeansConfig",
    "PsnrFormula",
    "mse",
    "psnr",
    "DeviceClass",
    "DeviceProfile",
    "EstimationTable",
    "QosDecision",
    "QosMode",
    "decide",
    "BandwidthTrace",
    "LossPlan",
    "StreamReport",
    "__version__",
]
