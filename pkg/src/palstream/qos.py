"""QoS decision engine: device profiles, the estimation table, and palette-size selection.

Given a device profile and the measured bandwidth ``sigma``, the engine either
leaves the stream untouched (``sigma`` strictly above the threshold ``theta``)
or picks a palette size: it lowers the target PSNR by 1 dB per 10% of
bandwidth deficit (floor 25 dB), looks up the nearest estimation-table row for
the device class, and feeds (estimated size, class, PSNR) into the fitted
linear model.  The predicted palette size is rounded and clamped to [2, 256].

Device classes: width <= 600 and height <= 450 is a thin client (coded 1),
anything larger a desktop (coded 2).  CPU and battery are carried in the
profile for logging but do not influence the decision.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum, IntEnum

from . import codec, regression
from .errors import ContractError, FormatError, InfeasibleError, ProfileError

__all__ = [
    "DeviceClass",
    "DeviceProfile",
    "TableRow",
    "EstimationTable",
    "QosMode",
    "QosDecision",
    "parse_profile",
    "format_profile",
    "classify_device",
    "adjust_target_psnr",
    "lookup",
    "decide",
    "build_estimation_table",
    "load_table_csv",
    "table_to_csv",
    "decision_csv_line",
]

PSNR_FLOOR = 25.0
PSNR_CEILING = 50.0
DEFAULT_TARGET_PSNR = 30.0
DEFAULT_THETA_FRACTION = 0.8
MU_MIN, MU_MAX = codec.MU_MIN, codec.MU_MAX

THIN_CLIENT_MAX_WIDTH = 600
THIN_CLIENT_MAX_HEIGHT = 450


class DeviceClass(IntEnum):
    THIN_CLIENT = 1
    DESKTOP = 2


class QosMode(str, Enum):
    FULL = "full_transmission"
    COMPRESSED = "compressed"


@dataclass(frozen=True)
class DeviceProfile:
    """Hardware/network snapshot reported by a client device."""

    resolution: tuple[int, int]
    cpu: float
    battery: float
    bandwidth_kbps: float

    def __post_init__(self) -> None:
        w, h = self.resolution
        if w < 1 or h < 1:
            raise ProfileError(f"resolution must be positive, got {w}x{h}")
        if not 0.0 <= self.cpu <= 1.0:
            raise ProfileError(f"cpu must be in [0, 1], got {self.cpu}")
        if not 0.0 <= self.battery <= 1.0:
            raise ProfileError(f"battery must be in [0, 1], got {self.battery}")
        if self.bandwidth_kbps < 0:
            raise ProfileError(f"bandwidth_kbps must be nonnegative, got {self.bandwidth_kbps}")


_PROFILE_KEYS = ("resolution", "cpu", "battery", "bandwidth_kbps")


def parse_profile(text: str) -> DeviceProfile:
    """Parse the flat ``key=value`` profile format.

    Required keys: resolution (``WxH``), cpu, battery, bandwidth_kbps.
    Unknown keys are rejected so typos fail loudly.
    """
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ProfileError(f"profile line {lineno}: expected key=value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _PROFILE_KEYS:
            raise ProfileError(f"profile line {lineno}: unknown key {key!r}")
        if key in values:
            raise ProfileError(f"profile line {lineno}: duplicate key {key!r}")
        values[key] = value.strip()
    for key in _PROFILE_KEYS:
        if key not in values:
            raise ProfileError(f"profile is missing key {key!r}")
    res = values["resolution"]
    try:
        w_text, _, h_text = res.partition("x")
        resolution = (int(w_text), int(h_text))
    except ValueError:
        raise ProfileError(f"bad resolution {res!r}, expected WxH") from None
    try:
        cpu = float(values["cpu"])
        battery = float(values["battery"])
        bandwidth = float(values["bandwidth_kbps"])
    except ValueError as exc:
        raise ProfileError(f"bad numeric value in profile: {exc}") from None
    return DeviceProfile(resolution=resolution, cpu=cpu, battery=battery, bandwidth_kbps=bandwidth)


def format_profile(profile: DeviceProfile) -> str:
    """Inverse of :func:`parse_profile` (round-trips exactly)."""
    w, h = profile.resolution
    return (
        f"resolution={w}x{h}\n"
        f"cpu={profile.cpu!r}\n"
        f"battery={profile.battery!r}\n"
        f"bandwidth_kbps={profile.bandwidth_kbps!r}\n"
    )


def classify_device(resolution: tuple[int, int]) -> DeviceClass:
    w, h = resolution
    if w < 1 or h < 1:
        raise ContractError(f"resolution must be positive, got {w}x{h}")
    if w <= THIN_CLIENT_MAX_WIDTH and h <= THIN_CLIENT_MAX_HEIGHT:
        return DeviceClass.THIN_CLIENT
    return DeviceClass.DESKTOP


def adjust_target_psnr(
    sigma_kbps: float, theta_kbps: float, default_psnr_db: float = DEFAULT_TARGET_PSNR
) -> float:
    """Lower the target PSNR by 1 dB per started 10% of bandwidth deficit.

    ``sigma == theta`` means no deficit and returns the default; the result is
    clamped to the acceptable [25, 50] dB band.
    """
    if theta_kbps <= 0:
        raise ContractError(f"theta must be positive, got {theta_kbps}")
    if sigma_kbps > theta_kbps:
        raise ContractError("adjust_target_psnr applies only when sigma <= theta")
    if not PSNR_FLOOR <= default_psnr_db <= PSNR_CEILING:
        raise ContractError(f"default PSNR must be in [25, 50], got {default_psnr_db}")
    deficit = (theta_kbps - sigma_kbps) / theta_kbps
    # The 1e-12 guard keeps exact 10% multiples from ceiling up on fp noise.
    steps = max(0, math.ceil(deficit * 10.0 - 1e-12))
    return min(PSNR_CEILING, max(PSNR_FLOOR, default_psnr_db - float(steps)))


@dataclass(frozen=True)
class TableRow:
    """(class, resolution, PSNR) -> expected compressed size in kB."""

    device_class: DeviceClass
    resolution: tuple[int, int]
    psnr_db: float
    size_kb: float


@dataclass(eq=False)
class EstimationTable:
    rows: list[TableRow]

    def rows_for(self, device_class: DeviceClass) -> list[TableRow]:
        return [r for r in self.rows if r.device_class == device_class]


def lookup(table: EstimationTable, device_class: DeviceClass, target_psnr_db: float) -> TableRow:
    """Row of the given class nearest to the target PSNR (ties toward lower PSNR)."""
    candidates = table.rows_for(device_class)
    if not candidates:
        raise InfeasibleError(f"estimation table has no rows for device class {int(device_class)}")
    return min(candidates, key=lambda r: (abs(r.psnr_db - target_psnr_db), r.psnr_db))


@dataclass(frozen=True)
class QosDecision:
    mode: QosMode
    sigma_kbps: float
    theta_kbps: float
    mu_real: float | None = None
    mu_int: int | None = None
    target_psnr_db: float | None = None
    chosen_row: TableRow | None = None


def clamp_mu(mu_real: float) -> int:
    """Round a predicted palette size to the nearest integer and clamp to [2, 256]."""
    return min(MU_MAX, max(MU_MIN, int(math.floor(mu_real + 0.5))))


def decide(
    profile: DeviceProfile,
    table: EstimationTable,
    model: regression.LinearModel,
    theta_kbps: float,
    default_psnr_db: float = DEFAULT_TARGET_PSNR,
) -> QosDecision:
    """Pick the transmission mode and, when compressing, the palette size.

    Bandwidth strictly above ``theta`` means full transmission.  Otherwise the
    target PSNR is adjusted to the deficit, the nearest table row for the
    device class is chosen, and the model predicts the palette size from
    (row size, class code, row PSNR).
    """
    sigma = profile.bandwidth_kbps
    if sigma > theta_kbps:
        return QosDecision(mode=QosMode.FULL, sigma_kbps=sigma, theta_kbps=theta_kbps)
    target = adjust_target_psnr(sigma, theta_kbps, default_psnr_db)
    device_class = classify_device(profile.resolution)
    row = lookup(table, device_class, target)
    mu_real = regression.predict(model, (row.size_kb, float(row.device_class), row.psnr_db))
    return QosDecision(
        mode=QosMode.COMPRESSED,
        sigma_kbps=sigma,
        theta_kbps=theta_kbps,
        mu_real=mu_real,
        mu_int=clamp_mu(mu_real),
        target_psnr_db=target,
        chosen_row=row,
    )


def _fmt(value: float | None) -> str:
    return "" if value is None else format(value, ".10g")


def decision_csv_line(decision: QosDecision) -> str:
    """One-line CSV: mode,mu_real,mu_int,target_psnr,sigma,theta,row_psnr,row_size."""
    row = decision.chosen_row
    fields = [
        decision.mode.value,
        _fmt(decision.mu_real),
        "" if decision.mu_int is None else str(decision.mu_int),
        _fmt(decision.target_psnr_db),
        _fmt(decision.sigma_kbps),
        _fmt(decision.theta_kbps),
        _fmt(row.psnr_db if row else None),
        _fmt(row.size_kb if row else None),
    ]
    return ",".join(fields)


# ---------------------------------------------------------------------------
# Estimation-table construction and CSV persistence

# Reference rows shipped with the toolkit; table generation always pins these
# verbatim, overriding any derived bucket with the same (class, PSNR) key.
REFERENCE_ROWS = (
    TableRow(DeviceClass.THIN_CLIENT, (300, 212), 28.0, 20.6),
    TableRow(DeviceClass.THIN_CLIENT, (600, 450), 30.0, 42.2),
    TableRow(DeviceClass.DESKTOP, (800, 600), 25.0, 373.9),
    TableRow(DeviceClass.DESKTOP, (1920, 1080), 40.0, 657.2),
)

# Representative geometry attached to derived rows; lookups key on class and
# PSNR only, so this is informational.
_CLASS_GEOMETRY = {
    DeviceClass.THIN_CLIENT: (600, 450),
    DeviceClass.DESKTOP: (1920, 1080),
}

TABLE_HEADER = ["device_class", "width", "height", "psnr_db", "estimated_size_kb"]

# Palette sizes whose compressed sizes are averaged into the table buckets.
TABLE_MU_RANGE = (8, 64)


def build_estimation_table(records: list[regression.CompressionRecord]) -> EstimationTable:
    """Derive the estimation table from historical records.

    Records with palette size in [8, 64] are grouped per (device class,
    nearest-integer PSNR); each group's estimated size is the mean compressed
    size.  Buckets outside the acceptable 25..50 dB band are dropped and the
    pinned reference rows override same-key buckets.
    """
    lo, hi = TABLE_MU_RANGE
    usable = [r for r in records if lo <= r.mu <= hi]
    for cls in DeviceClass:
        if not any(r.resolution_code == int(cls) for r in usable):
            raise InfeasibleError(f"history has no usable rows for device class {int(cls)}")
    buckets: dict[tuple[int, int], list[float]] = {}
    for r in usable:
        psnr_bucket = int(round(r.psnr_db))
        if not PSNR_FLOOR <= psnr_bucket <= PSNR_CEILING:
            continue
        buckets.setdefault((r.resolution_code, psnr_bucket), []).append(r.size_kb)
    pinned = {(int(row.device_class), int(row.psnr_db)): row for row in REFERENCE_ROWS}
    rows = list(REFERENCE_ROWS)
    for (cls_code, psnr_bucket), sizes in buckets.items():
        if (cls_code, psnr_bucket) in pinned:
            continue
        cls = DeviceClass(cls_code)
        rows.append(
            TableRow(
                device_class=cls,
                resolution=_CLASS_GEOMETRY[cls],
                psnr_db=float(psnr_bucket),
                size_kb=sum(sizes) / len(sizes),
            )
        )
    rows.sort(key=lambda r: (int(r.device_class), r.psnr_db))
    return EstimationTable(rows=rows)


def table_to_csv(table: EstimationTable) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TABLE_HEADER)
    for row in table.rows:
        writer.writerow(
            [
                int(row.device_class),
                row.resolution[0],
                row.resolution[1],
                format(row.psnr_db, ".10g"),
                format(row.size_kb, ".10g"),
            ]
        )
    return out.getvalue()


def load_table_csv(text: str) -> EstimationTable:
    """Parse an estimation-table CSV, enforcing the table invariants.

    Every PSNR must lie in [25, 50], sizes must be positive, and both device
    classes must be present.
    """
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("estimation table CSV is empty") from None
    if [h.strip() for h in header] != TABLE_HEADER:
        raise FormatError(f"bad table header {header!r}, expected {TABLE_HEADER!r}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(TABLE_HEADER):
            raise FormatError(f"table line {lineno}: expected {len(TABLE_HEADER)} fields, got {len(row)}")
        try:
            cls = DeviceClass(int(row[0]))
            parsed = TableRow(
                device_class=cls,
                resolution=(int(row[1]), int(row[2])),
                psnr_db=float(row[3]),
                size_kb=float(row[4]),
            )
        except ValueError as exc:
            raise FormatError(f"table line {lineno}: {exc}") from None
        if not PSNR_FLOOR <= parsed.psnr_db <= PSNR_CEILING:
            raise FormatError(f"table line {lineno}: PSNR {parsed.psnr_db} outside [25, 50]")
        if parsed.size_kb <= 0:
            raise FormatError(f"table line {lineno}: size must be positive, got {parsed.size_kb}")
        rows.append(parsed)
    table = EstimationTable(rows=rows)
    for cls in DeviceClass:
        if not table.rows_for(cls):
            raise FormatError(f"estimation table has no rows for device class {int(cls)}")
    return table
