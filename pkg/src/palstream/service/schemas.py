"""Request/response bodies for the HTTP service.

Binary payloads (PPM images, PQF1 containers) travel base64-encoded.  PSNR
values travel as strings because equal images yield infinite PSNR and JSON
has no representation for it; ``"inf"`` is the sentinel.
"""

from __future__ import annotations

from pydantic import BaseModel

from ..metrics import PsnrFormula

DEFAULT_SEED = 0


class ErrorBody(BaseModel):
    category: str
    message: str


class ErrorEnvelope(BaseModel):
    error: ErrorBody


class CompressRequest(BaseModel):
    ppm_base64: str
    mu: int
    seed: int = DEFAULT_SEED
    psnr_formula: PsnrFormula = PsnrFormula.CANONICAL


class CompressResponse(BaseModel):
    pqf_base64: str
    width: int
    height: int
    mu: int
    size_bytes: int
    compression_ratio: float
    psnr_db: str
    mse: float


class DecompressRequest(BaseModel):
    pqf_base64: str


class DecompressResponse(BaseModel):
    ppm_base64: str
    width: int
    height: int
    mu: int


class MetricsRequest(BaseModel):
    reference_ppm_base64: str
    test_ppm_base64: str
    psnr_formula: PsnrFormula = PsnrFormula.CANONICAL


class MetricsResponse(BaseModel):
    width: int
    height: int
    mse: float
    psnr_db: str


class FitRequest(BaseModel):
    history_csv: str | None = None
    psnr_min: float = 25.0
    psnr_max: float = 50.0
    cooks_rule: str = "4overN"


class FitResponse(BaseModel):
    model_csv: str
    coefficients: list[float]
    removed_row_indices: list[int]
    n_rows_used: int
    histogram_bin_edges: list[float]
    histogram_counts: list[int]
    qq_theoretical: list[float]
    qq_observed: list[float]


class DecideRequest(BaseModel):
    profile_text: str
    nominal_kbps: float
    theta_fraction: float = 0.8
    default_psnr_db: float = 30.0
    table_csv: str | None = None
    model_csv: str | None = None


class DecideResponse(BaseModel):
    decision_line: str
    mode: str
    mu_real: float | None
    mu_int: int | None
    target_psnr_db: float | None
    sigma_kbps: float
    theta_kbps: float
    row_psnr_db: float | None
    row_size_kb: float | None


class GenTableRequest(BaseModel):
    history_csv: str | None = None


class GenTableResponse(BaseModel):
    table_csv: str


class SimulateRequest(BaseModel):
    frames_ppm_base64: list[str]
    trace_csv: str
    loss_frames: list[int] = []
    qos_enabled: bool = True
    baseline_mu: int = 128
    seed: int = DEFAULT_SEED
    theta_fraction: float = 0.8
    default_psnr_db: float = 30.0
    table_csv: str | None = None
    model_csv: str | None = None
    psnr_formula: PsnrFormula = PsnrFormula.CANONICAL


class SimulateResponse(BaseModel):
    report_csv: str
    total_bytes: int
    mean_psnr_db: str
    min_psnr_db: str
