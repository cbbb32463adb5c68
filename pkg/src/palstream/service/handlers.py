"""Service operations as plain functions.

Each handler takes a request model and returns a response model, raising
:class:`~palstream.errors.PalstreamError` subclasses on bad input.  The HTTP
app and the CLI both call these; the CLI does so in-process so it works
without a running server.
"""

from __future__ import annotations

import base64
import binascii

from .. import codec, defaults, metrics, qos, regression, simulator
from ..errors import ContractError, FormatError
from ..image_io import read_ppm, write_ppm
from ..kmeans import KmeansConfig
from . import schemas

__all__ = [
    "compress",
    "decompress",
    "compute_metrics",
    "fit",
    "decide",
    "gen_table",
    "simulate",
]


def _decode_base64(payload: str, what: str) -> bytes:
    try:
        return base64.b64decode(payload.encode("ascii"), validate=True)
    except (binascii.Error, ValueError, UnicodeEncodeError):
        raise FormatError(f"{what} is not valid base64") from None


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _load_model(model_csv: str | None) -> regression.LinearModel:
    if model_csv is None:
        return defaults.reference_model()
    return regression.model_from_csv(model_csv)


def _load_table(table_csv: str | None) -> qos.EstimationTable:
    if table_csv is None:
        return defaults.default_table()
    return qos.load_table_csv(table_csv)


def _load_history(history_csv: str | None) -> list[regression.CompressionRecord]:
    if history_csv is None:
        return defaults.default_history()
    return regression.load_history_csv(history_csv)


def compress(req: schemas.CompressRequest) -> schemas.CompressResponse:
    img = read_ppm(_decode_base64(req.ppm_base64, "ppm_base64"))
    kcfg = KmeansConfig(k=max(req.mu, 2), seed=req.seed)
    quantized = codec.encode(img, req.mu, kcfg)
    payload = codec.serialize(quantized)
    restored = codec.decode(quantized)
    return schemas.CompressResponse(
        pqf_base64=_b64(payload),
        width=img.width,
        height=img.height,
        mu=req.mu,
        size_bytes=len(payload),
        compression_ratio=codec.compression_ratio(img.width, img.height, req.mu),
        psnr_db=metrics.format_db(metrics.psnr(img, restored, formula=req.psnr_formula)),
        mse=metrics.mse(img, restored),
    )


def decompress(req: schemas.DecompressRequest) -> schemas.DecompressResponse:
    quantized = codec.deserialize(_decode_base64(req.pqf_base64, "pqf_base64"))
    img = codec.decode(quantized)
    return schemas.DecompressResponse(
        ppm_base64=_b64(write_ppm(img)),
        width=img.width,
        height=img.height,
        mu=quantized.mu,
    )


def compute_metrics(req: schemas.MetricsRequest) -> schemas.MetricsResponse:
    reference = read_ppm(_decode_base64(req.reference_ppm_base64, "reference_ppm_base64"))
    test = read_ppm(_decode_base64(req.test_ppm_base64, "test_ppm_base64"))
    return schemas.MetricsResponse(
        width=reference.width,
        height=reference.height,
        mse=metrics.mse(reference, test),
        psnr_db=metrics.format_db(metrics.psnr(reference, test, formula=req.psnr_formula)),
    )


def fit(req: schemas.FitRequest) -> schemas.FitResponse:
    records = _load_history(req.history_csv)
    dataset = regression.history_to_dataset(records, psnr_min=req.psnr_min, psnr_max=req.psnr_max)
    model = regression.fit_with_outlier_removal(dataset, threshold_rule=req.cooks_rule)
    diag = regression.residual_diagnostics(model)
    return schemas.FitResponse(
        model_csv=regression.model_to_csv(model),
        coefficients=[float(b) for b in model.beta],
        removed_row_indices=list(model.removed_row_indices),
        n_rows_used=dataset.n - len(model.removed_row_indices),
        histogram_bin_edges=[float(v) for v in diag.bin_edges],
        histogram_counts=[int(v) for v in diag.counts],
        qq_theoretical=[float(v) for v in diag.qq_theoretical],
        qq_observed=[float(v) for v in diag.qq_observed],
    )


def decide(req: schemas.DecideRequest) -> schemas.DecideResponse:
    if req.nominal_kbps <= 0:
        raise ContractError(f"nominal_kbps must be positive, got {req.nominal_kbps}")
    if req.theta_fraction <= 0:
        raise ContractError(f"theta_fraction must be positive, got {req.theta_fraction}")
    profile = qos.parse_profile(req.profile_text)
    table = _load_table(req.table_csv)
    model = _load_model(req.model_csv)
    theta = req.theta_fraction * req.nominal_kbps
    decision = qos.decide(profile, table, model, theta, req.default_psnr_db)
    row = decision.chosen_row
    return schemas.DecideResponse(
        decision_line=qos.decision_csv_line(decision),
        mode=decision.mode.value,
        mu_real=decision.mu_real,
        mu_int=decision.mu_int,
        target_psnr_db=decision.target_psnr_db,
        sigma_kbps=decision.sigma_kbps,
        theta_kbps=decision.theta_kbps,
        row_psnr_db=row.psnr_db if row else None,
        row_size_kb=row.size_kb if row else None,
    )


def gen_table(req: schemas.GenTableRequest) -> schemas.GenTableResponse:
    records = _load_history(req.history_csv)
    table = qos.build_estimation_table(records)
    return schemas.GenTableResponse(table_csv=qos.table_to_csv(table))


def simulate(req: schemas.SimulateRequest) -> schemas.SimulateResponse:
    if not req.frames_ppm_base64:
        raise ContractError("need at least one frame")
    frames = [
        read_ppm(_decode_base64(payload, f"frames_ppm_base64[{i}]"))
        for i, payload in enumerate(req.frames_ppm_base64)
    ]
    trace = simulator.parse_trace_csv(req.trace_csv)
    losses = simulator.LossPlan(frame_indices=frozenset(req.loss_frames))
    report = simulator.run(
        frames,
        trace,
        losses,
        req.qos_enabled,
        model=_load_model(req.model_csv),
        table=_load_table(req.table_csv),
        theta_fraction=req.theta_fraction,
        default_psnr_db=req.default_psnr_db,
        baseline_mu=req.baseline_mu,
        kconfig=KmeansConfig(k=2, seed=req.seed),
        psnr_formula=req.psnr_formula,
    )
    return schemas.SimulateResponse(
        report_csv=simulator.report_to_csv(report),
        total_bytes=report.total_bytes,
        mean_psnr_db=metrics.format_db(report.mean_psnr_db),
        min_psnr_db=metrics.format_db(report.min_psnr_db),
    )
