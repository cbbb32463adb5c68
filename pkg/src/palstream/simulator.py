"""Trace-driven replay of a palette-compressed screen stream.

Frames are pushed at a fixed rate while measured bandwidth follows a recorded
trace (a step function over time).  With QoS enabled, each frame runs through
the decision engine; frames decided as full transmission, and every frame of a
QoS-disabled run, are encoded at a fixed baseline palette size, so enabling
QoS only ever substitutes smaller palettes during bandwidth dips.

Lost frames deliver zero bytes and are concealed by repeating the last frame
that arrived (an all-black frame when nothing has arrived yet).  Reported
per-frame PSNR always scores what the viewer sees against the source frame.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from collections.abc import Collection, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import codec, metrics, qos, regression
from .errors import ContractError, FormatError, TraceError
from .image_io import RgbImage
from .kmeans import KmeansConfig

__all__ = [
    "BandwidthTrace",
    "LossPlan",
    "FrameRecord",
    "StreamReport",
    "parse_trace_csv",
    "trace_to_csv",
    "conceal",
    "run",
    "report_to_csv",
    "DEFAULT_FPS",
]

DEFAULT_FPS = 24.0
TRACE_HEADER = ["time_ms", "bandwidth_kbps"]
REPORT_HEADER = ["frame", "mode", "mu", "bytes", "lost", "concealed_from", "psnr_db"]


@dataclass(frozen=True)
class BandwidthTrace:
    """Step function of measured bandwidth plus the link's nominal capacity."""

    times_ms: tuple[float, ...]
    bandwidth_kbps: tuple[float, ...]
    nominal_kbps: float

    def __post_init__(self) -> None:
        if len(self.times_ms) != len(self.bandwidth_kbps):
            raise ContractError("trace times and bandwidths must have equal length")
        if not self.times_ms:
            raise ContractError("trace must contain at least one sample")
        if self.nominal_kbps <= 0:
            raise ContractError(f"nominal_kbps must be positive, got {self.nominal_kbps}")
        for i in range(1, len(self.times_ms)):
            if self.times_ms[i] <= self.times_ms[i - 1]:
                raise ContractError(
                    f"trace times must be strictly increasing, "
                    f"got {self.times_ms[i]} after {self.times_ms[i - 1]}"
                )
        if any(b < 0 for b in self.bandwidth_kbps):
            raise ContractError("trace bandwidths must be nonnegative")

    @property
    def end_ms(self) -> float:
        return self.times_ms[-1]

    def sample(self, t_ms: float) -> float:
        """Bandwidth in effect at ``t_ms`` (value of the latest sample at or before it)."""
        if t_ms < self.times_ms[0]:
            raise TraceError(
                f"trace starts at {self.times_ms[0]} ms, cannot sample at {t_ms} ms"
            )
        idx = bisect.bisect_right(self.times_ms, t_ms) - 1
        return self.bandwidth_kbps[idx]


def parse_trace_csv(text: str) -> BandwidthTrace:
    """Parse a trace CSV.

    Expected shape: a ``# nominal_kbps=<value>`` comment, the
    ``time_ms,bandwidth_kbps`` header, then one sample per line with strictly
    increasing times.
    """
    nominal: float | None = None
    data_lines: list[str] = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped.lstrip("#").strip()
            if body.startswith("nominal_kbps="):
                if nominal is not None:
                    raise FormatError("trace declares nominal_kbps more than once")
                value = body.partition("=")[2].strip()
                try:
                    nominal = float(value)
                except ValueError:
                    raise FormatError(f"bad nominal_kbps value {value!r}") from None
            continue
        data_lines.append(stripped)
    if nominal is None:
        raise FormatError("trace is missing the '# nominal_kbps=' line")
    reader = csv.reader(data_lines)
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("trace CSV has no header") from None
    if [h.strip() for h in header] != TRACE_HEADER:
        raise FormatError(f"bad trace header {header!r}, expected {TRACE_HEADER!r}")
    times: list[float] = []
    bandwidths: list[float] = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 2:
            raise FormatError(f"trace line {lineno}: expected 2 fields, got {len(row)}")
        try:
            times.append(float(row[0]))
            bandwidths.append(float(row[1]))
        except ValueError as exc:
            raise FormatError(f"trace line {lineno}: {exc}") from None
    try:
        return BandwidthTrace(
            times_ms=tuple(times), bandwidth_kbps=tuple(bandwidths), nominal_kbps=nominal
        )
    except ContractError as exc:
        raise FormatError(str(exc)) from None


def trace_to_csv(trace: BandwidthTrace) -> str:
    out = io.StringIO()
    out.write(f"# nominal_kbps={format(trace.nominal_kbps, '.10g')}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for t, b in zip(trace.times_ms, trace.bandwidth_kbps):
        writer.writerow([format(t, ".10g"), format(b, ".10g")])
    return out.getvalue()


@dataclass(frozen=True)
class LossPlan:
    """Frame indices dropped in transit."""

    frame_indices: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        if any(i < 0 for i in self.frame_indices):
            raise ContractError("loss plan frame indices must be nonnegative")

    @classmethod
    def from_text(cls, text: str) -> "LossPlan":
        """Parse a comma-separated index list; an empty string loses nothing."""
        stripped = text.strip()
        if not stripped:
            return cls()
        indices = set()
        for part in stripped.split(","):
            try:
                indices.add(int(part.strip()))
            except ValueError:
                raise ContractError(f"bad loss index {part.strip()!r}") from None
        return cls(frame_indices=frozenset(indices))

    def __contains__(self, frame_index: int) -> bool:
        return frame_index in self.frame_indices


@dataclass(frozen=True)
class FrameRecord:
    frame_index: int
    mode: qos.QosMode
    mu: int | None
    bytes_delivered: int
    lost: bool
    concealed_from: int | None
    psnr_db: float


@dataclass(eq=False)
class StreamReport:
    frames: list[FrameRecord]
    displayed: list[RgbImage] = field(default_factory=list, repr=False)

    @property
    def total_bytes(self) -> int:
        return sum(r.bytes_delivered for r in self.frames)

    @property
    def mean_psnr_db(self) -> float:
        if not self.frames:
            raise ContractError("report has no frames")
        return sum(r.psnr_db for r in self.frames) / len(self.frames)

    @property
    def min_psnr_db(self) -> float:
        if not self.frames:
            raise ContractError("report has no frames")
        return min(r.psnr_db for r in self.frames)


def _black_frame(width: int, height: int) -> RgbImage:
    return RgbImage(np.zeros((height, width, 3), dtype=np.uint8))


def conceal(arrivals: Sequence[RgbImage | None], lost_index: int) -> tuple[int, RgbImage]:
    """Pick the substitute for a lost frame: the latest earlier frame that arrived.

    ``arrivals[i]`` is the frame the viewer received at slot ``i`` (post-decode),
    or ``None`` if that frame was lost.  Returns the source slot and its frame.
    """
    if lost_index < 0:
        raise ContractError(f"lost_index must be nonnegative, got {lost_index}")
    for j in range(min(lost_index, len(arrivals)) - 1, -1, -1):
        frame = arrivals[j]
        if frame is not None:
            return j, frame
    raise ContractError(f"no received frame precedes frame {lost_index}")


def run(
    frames: Sequence[RgbImage],
    trace: BandwidthTrace,
    losses: LossPlan | Collection[int] = (),
    qos_enabled: bool = True,
    *,
    model: regression.LinearModel,
    table: qos.EstimationTable,
    theta_fraction: float = qos.DEFAULT_THETA_FRACTION,
    default_psnr_db: float = qos.DEFAULT_TARGET_PSNR,
    baseline_mu: int = 128,
    kconfig: KmeansConfig | None = None,
    fps: float = DEFAULT_FPS,
    psnr_formula: metrics.PsnrFormula = metrics.PsnrFormula.CANONICAL,
) -> StreamReport:
    """Replay ``frames`` against ``trace`` and return the per-frame report.

    Frame ``i`` is sent at ``i * 1000 / fps`` ms; the trace must start at or
    before the first frame and extend to the last one.  The QoS threshold is
    ``theta_fraction`` of the trace's nominal bandwidth.  Frames with fewer
    distinct colors than the chosen palette are encoded with the largest
    feasible palette; frames with a single color bypass the codec and count as
    raw RGB bytes.
    """
    if not frames:
        raise ContractError("need at least one frame")
    if fps <= 0:
        raise ContractError(f"fps must be positive, got {fps}")
    if theta_fraction <= 0:
        raise ContractError(f"theta_fraction must be positive, got {theta_fraction}")
    if not codec.MU_MIN <= baseline_mu <= codec.MU_MAX:
        raise ContractError(f"baseline_mu must be in [2, 256], got {baseline_mu}")
    if not isinstance(losses, LossPlan):
        losses = LossPlan(frame_indices=frozenset(losses))
    width, height = frames[0].width, frames[0].height
    for i, frame in enumerate(frames):
        if frame.width != width or frame.height != height:
            raise ContractError(
                f"frame {i} is {frame.width}x{frame.height}, expected {width}x{height}"
            )
    out_of_range = [i for i in losses.frame_indices if i >= len(frames)]
    if out_of_range:
        raise ContractError(f"loss plan names frames beyond the sequence: {sorted(out_of_range)}")
    last_time = (len(frames) - 1) * 1000.0 / fps
    if trace.end_ms < last_time:
        raise TraceError(
            f"trace ends at {trace.end_ms} ms but the last frame is sent at "
            f"{format(last_time, '.10g')} ms"
        )
    theta = theta_fraction * trace.nominal_kbps

    records: list[FrameRecord] = []
    displayed: list[RgbImage] = []
    arrivals: list[RgbImage | None] = []
    any_arrived = False
    for i, frame in enumerate(frames):
        sigma = trace.sample(i * 1000.0 / fps)
        mode = qos.QosMode.FULL
        requested_mu = baseline_mu
        if qos_enabled:
            profile = qos.DeviceProfile(
                resolution=(width, height), cpu=1.0, battery=1.0, bandwidth_kbps=sigma
            )
            decision = qos.decide(profile, table, model, theta, default_psnr_db)
            mode = decision.mode
            if decision.mode is qos.QosMode.COMPRESSED:
                assert decision.mu_int is not None
                requested_mu = decision.mu_int

        distinct = codec.distinct_colors(frame)
        if distinct < codec.MU_MIN:
            mode = qos.QosMode.FULL
            mu_used: int | None = None
            payload_size = 3 * width * height
            received = frame
        else:
            mu_used = min(requested_mu, distinct)
            quantized = codec.encode(frame, mu_used, kconfig)
            payload_size = len(codec.serialize(quantized))
            received = codec.decode(quantized)
            if mode is qos.QosMode.FULL:
                mu_used = None

        lost = i in losses
        if lost:
            delivered = 0
            arrivals.append(None)
            if any_arrived:
                concealed_from, shown = conceal(arrivals, i)
            else:
                concealed_from = None
                shown = _black_frame(width, height)
        else:
            delivered = payload_size
            concealed_from = None
            shown = received
            arrivals.append(received)
            any_arrived = True

        records.append(
            FrameRecord(
                frame_index=i,
                mode=mode,
                mu=mu_used,
                bytes_delivered=delivered,
                lost=lost,
                concealed_from=concealed_from,
                psnr_db=metrics.psnr(frame, shown, formula=psnr_formula),
            )
        )
        displayed.append(shown)
    return StreamReport(frames=records, displayed=displayed)


def report_to_csv(report: StreamReport) -> str:
    """Render the per-frame rows plus trailing aggregate comment lines."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    for r in report.frames:
        writer.writerow(
            [
                r.frame_index,
                r.mode.value,
                "" if r.mu is None else r.mu,
                r.bytes_delivered,
                int(r.lost),
                "" if r.concealed_from is None else r.concealed_from,
                metrics.format_db(r.psnr_db),
            ]
        )
    out.write(f"# mean_psnr_db={metrics.format_db(report.mean_psnr_db)}\n")
    out.write(f"# min_psnr_db={metrics.format_db(report.min_psnr_db)}\n")
    out.write(f"# total_bytes={report.total_bytes}\n")
    return out.getvalue()
