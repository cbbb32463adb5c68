"""Multiple linear regression with influence diagnostics.

The estimator solves the least-squares normal equations for a design matrix
with a prepended intercept column.  The solve itself goes through an
orthogonal decomposition (SVD via ``numpy.linalg.lstsq``) rather than forming
``(X'X)^-1`` explicitly, which preserves the normal-equation solution while
staying numerically stable.  Cook's distance is computed from leverages taken
off a reduced QR factorization, and rows whose distance exceeds a threshold
(``4/n`` by default) can be pruned in a single remove-and-refit pass.

This module also owns the historical-observation CSV that feeds the QoS
predictor: ``image,resolution_code,mu,size_kb,psnr_db,cr``, one row per
compression measurement.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, FormatError, InfeasibleError, NumericError, SingularDesignError

__all__ = [
    "Dataset",
    "LinearModel",
    "CompressionRecord",
    "fit",
    "predict",
    "cooks_distance",
    "cooks_threshold",
    "fit_with_outlier_removal",
    "residual_diagnostics",
    "ResidualDiagnostics",
    "load_history_csv",
    "history_to_dataset",
    "model_to_csv",
    "model_from_csv",
    "PREDICTOR_NAMES",
]

# Predictor order expected by the QoS decision engine.
PREDICTOR_NAMES = ("size_kb", "resolution_class", "psnr_db")

CONDITION_LIMIT = 1e12


@dataclass(eq=False)
class Dataset:
    """Observations for a fit: predictors ``(n, k)`` and response ``(n,)``."""

    predictors: np.ndarray
    response: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.predictors, dtype=np.float64)
        y = np.asarray(self.response, dtype=np.float64)
        if x.ndim != 2:
            raise ContractError(f"predictors must be 2-dimensional, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise ContractError(f"response shape {y.shape} does not match {x.shape[0]} rows")
        self.predictors = x
        self.response = y

    @property
    def n(self) -> int:
        return self.predictors.shape[0]

    @property
    def k(self) -> int:
        return self.predictors.shape[1]

    def subset(self, keep: np.ndarray) -> "Dataset":
        return Dataset(self.predictors[keep], self.response[keep])


@dataclass(eq=False)
class LinearModel:
    """Fitted coefficients (intercept first) plus fit diagnostics."""

    beta: np.ndarray
    k: int
    residuals: np.ndarray
    cooks_distances: np.ndarray
    removed_row_indices: list[int] = field(default_factory=list)


def _design(data: Dataset) -> np.ndarray:
    return np.column_stack([np.ones(data.n), data.predictors])


def _name_dependent_column(design: np.ndarray) -> str:
    """Identify a column that is (numerically) in the span of the others."""
    names = ["intercept"] + [f"predictor {j}" for j in range(design.shape[1] - 1)]
    for j in range(design.shape[1]):
        others = np.delete(design, j, axis=1)
        col = design[:, j]
        coef, _, _, _ = np.linalg.lstsq(others, col, rcond=None)
        resid = col - others @ coef
        scale = np.linalg.norm(col) or 1.0
        if np.linalg.norm(resid) <= 1e-8 * scale:
            return names[j]
    return "unknown column"


def fit(data: Dataset) -> LinearModel:
    """Least-squares fit with intercept; raises on rank-deficient designs."""
    if data.n <= data.k + 1:
        raise ContractError(f"need more than {data.k + 1} rows to fit {data.k} predictors, got {data.n}")
    design = _design(data)
    beta, _, rank, sv = np.linalg.lstsq(design, data.response, rcond=None)
    p = data.k + 1
    if rank < p or sv[-1] == 0 or sv[0] / sv[-1] > CONDITION_LIMIT:
        raise SingularDesignError(f"design matrix is rank deficient ({_name_dependent_column(design)} is dependent)")
    residuals = data.response - design @ beta
    model = LinearModel(beta=beta, k=data.k, residuals=residuals, cooks_distances=np.zeros(data.n))
    model.cooks_distances = cooks_distance(data, model)
    return model


def predict(model: LinearModel, predictors) -> float:
    """Evaluate the fitted affine function at one predictor vector."""
    x = np.asarray(predictors, dtype=np.float64)
    if x.shape != (model.k,):
        raise ContractError(f"expected {model.k} predictors, got shape {x.shape}")
    return float(model.beta[0] + x @ model.beta[1:])


def cooks_distance(data: Dataset, model: LinearModel) -> np.ndarray:
    """Cook's distance for each observation of ``data`` under ``model``.

    Uses D_i = (e_i^2 / (p * s^2)) * (h_ii / (1 - h_ii)^2) with leverages from
    a reduced QR of the design.  All distances are 0 for a perfect fit.
    """
    p = model.k + 1
    if data.n <= p:
        raise NumericError(f"residual variance undefined: {data.n} rows with {p} parameters")
    design = _design(data)
    e = data.response - design @ model.beta
    s2 = float(e @ e) / (data.n - p)
    # a noiseless fit leaves rounding-level residuals; treating them as signal
    # would turn D_i into 0/0 noise
    floor = (1e-12 * max(1.0, float(np.max(np.abs(data.response))))) ** 2
    if s2 <= floor:
        return np.zeros(data.n)
    q, _ = np.linalg.qr(design)
    h = (q * q).sum(axis=1)
    denom = np.where(h < 1.0, (1.0 - h) ** 2, np.inf)
    d = (e * e) / (p * s2) * (h / denom)
    return np.where(e == 0.0, 0.0, d)


def cooks_threshold(rule: str | float, n: int) -> float:
    """Resolve an outlier threshold: ``"4overN"``/``"4/n"`` or a numeric level."""
    if isinstance(rule, (int, float)):
        return float(rule)
    text = rule.strip().lower()
    if text in ("4overn", "4/n"):
        return 4.0 / n
    try:
        return float(text)
    except ValueError:
        raise ContractError(f"unknown Cook's-distance rule {rule!r}") from None


def fit_with_outlier_removal(data: Dataset, threshold_rule: str | float = "4overN") -> LinearModel:
    """Fit, drop every row whose Cook's distance exceeds the threshold, refit once."""
    first = fit(data)
    threshold = cooks_threshold(threshold_rule, data.n)
    removed = np.flatnonzero(first.cooks_distances > threshold)
    if len(removed) == 0:
        return first
    keep = np.setdiff1d(np.arange(data.n), removed)
    if len(keep) <= data.k + 1:
        raise InfeasibleError(
            f"outlier removal leaves {len(keep)} rows, need more than {data.k + 1}"
        )
    refitted = fit(data.subset(keep))
    refitted.removed_row_indices = [int(i) for i in removed]
    return refitted


@dataclass(eq=False)
class ResidualDiagnostics:
    """Histogram (Sturges bins) and normal-probability-plot points for residuals."""

    bin_edges: np.ndarray
    counts: np.ndarray
    qq_theoretical: np.ndarray
    qq_observed: np.ndarray


def residual_diagnostics(model: LinearModel) -> ResidualDiagnostics:
    e = np.asarray(model.residuals, dtype=np.float64)
    n = len(e)
    if n == 0:
        raise ContractError("model has no residuals")
    bins = int(math.ceil(math.log2(n))) + 1 if n > 1 else 1
    counts, edges = np.histogram(e, bins=bins)
    order = np.sort(e)
    norm = statistics.NormalDist()
    theoretical = np.array([norm.inv_cdf((i - 0.5) / n) for i in range(1, n + 1)])
    return ResidualDiagnostics(bin_edges=edges, counts=counts, qq_theoretical=theoretical, qq_observed=order)


# ---------------------------------------------------------------------------
# Historical-observation CSV and model persistence


@dataclass(frozen=True)
class CompressionRecord:
    """One historical compression measurement."""

    image: str
    resolution_code: int
    mu: int
    size_kb: float
    psnr_db: float
    cr: float


HISTORY_HEADER = ["image", "resolution_code", "mu", "size_kb", "psnr_db", "cr"]


def load_history_csv(text: str) -> list[CompressionRecord]:
    """Parse the historical CSV; comment lines starting with ``#`` are skipped."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("history CSV is empty") from None
    if [h.strip() for h in header] != HISTORY_HEADER:
        raise FormatError(f"bad history header {header!r}, expected {HISTORY_HEADER!r}")
    records = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(HISTORY_HEADER):
            raise FormatError(f"history line {lineno}: expected {len(HISTORY_HEADER)} fields, got {len(row)}")
        try:
            records.append(
                CompressionRecord(
                    image=row[0].strip(),
                    resolution_code=int(row[1]),
                    mu=int(row[2]),
                    size_kb=float(row[3]),
                    psnr_db=float(row[4]),
                    cr=float(row[5]),
                )
            )
        except ValueError as exc:
            raise FormatError(f"history line {lineno}: {exc}") from None
    return records


def history_to_dataset(
    records: list[CompressionRecord], psnr_min: float = 25.0, psnr_max: float = 50.0
) -> Dataset:
    """Build the (size, resolution class, psnr) -> mu dataset from history rows.

    Rows with PSNR outside ``[psnr_min, psnr_max]`` are excluded before the fit.
    """
    kept = [r for r in records if psnr_min <= r.psnr_db <= psnr_max]
    if len(kept) <= len(PREDICTOR_NAMES) + 1:
        raise InfeasibleError(
            f"only {len(kept)} rows remain after the PSNR filter, need more than {len(PREDICTOR_NAMES) + 1}"
        )
    x = np.array([[r.size_kb, float(r.resolution_code), r.psnr_db] for r in kept])
    y = np.array([float(r.mu) for r in kept])
    return Dataset(predictors=x, response=y)


def model_to_csv(model: LinearModel) -> str:
    """Serialize a fitted model as ``term,coefficient`` rows (exact round trip)."""
    if model.k != len(PREDICTOR_NAMES):
        raise ContractError(f"model has {model.k} predictors, expected {len(PREDICTOR_NAMES)}")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["term", "coefficient"])
    for name, value in zip(("intercept",) + PREDICTOR_NAMES, model.beta):
        writer.writerow([name, repr(float(value))])
    if model.removed_row_indices:
        out.write("# removed_rows=" + ",".join(str(i) for i in model.removed_row_indices) + "\n")
    return out.getvalue()


def model_from_csv(text: str) -> LinearModel:
    """Load coefficients written by :func:`model_to_csv`."""
    removed: list[int] = []
    rows = []
    for ln in text.splitlines():
        stripped = ln.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            if stripped.startswith("# removed_rows="):
                removed = [int(v) for v in stripped.split("=", 1)[1].split(",") if v]
            continue
        rows.append(next(csv.reader([stripped])))
    if not rows or rows[0] != ["term", "coefficient"]:
        raise FormatError("model CSV must start with a 'term,coefficient' header")
    expected = ("intercept",) + PREDICTOR_NAMES
    if len(rows) != 1 + len(expected):
        raise FormatError(f"model CSV must have {len(expected)} coefficient rows, got {len(rows) - 1}")
    beta = []
    for row, name in zip(rows[1:], expected):
        if len(row) != 2 or row[0] != name:
            raise FormatError(f"unexpected model row {row!r}, expected term {name!r}")
        try:
            beta.append(float(row[1]))
        except ValueError:
            raise FormatError(f"bad coefficient {row[1]!r} for term {name!r}") from None
    return LinearModel(
        beta=np.array(beta),
        k=len(PREDICTOR_NAMES),
        residuals=np.zeros(0),
        cooks_distances=np.zeros(0),
        removed_row_indices=removed,
    )
