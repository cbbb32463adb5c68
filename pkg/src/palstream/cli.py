"""Command-line client for the palstream operations.

By default each subcommand calls the service handlers in-process, so no
server is needed.  With ``--server URL`` the same request is POSTed to a
running instance instead and the response is rendered identically.

Exit codes: 0 success, 2 usage, 3 malformed input data, 4 numeric failure,
5 infeasible request.
"""

from __future__ import annotations

import argparse
import base64
import sys
from pathlib import Path
from typing import TypeVar

import httpx
from pydantic import BaseModel

from .errors import CATEGORY_EXIT_CODES, ContractError, PalstreamError, error_from_category
from .metrics import PsnrFormula
from .service import handlers, schemas
from .simulator import LossPlan

R = TypeVar("R", bound=BaseModel)

_ENDPOINTS = {
    "compress": ("/v1/compress", handlers.compress, schemas.CompressResponse),
    "decompress": ("/v1/decompress", handlers.decompress, schemas.DecompressResponse),
    "metrics": ("/v1/metrics", handlers.compute_metrics, schemas.MetricsResponse),
    "fit": ("/v1/fit", handlers.fit, schemas.FitResponse),
    "decide": ("/v1/decide", handlers.decide, schemas.DecideResponse),
    "gen-table": ("/v1/gen-table", handlers.gen_table, schemas.GenTableResponse),
    "simulate": ("/v1/simulate", handlers.simulate, schemas.SimulateResponse),
}

_REMOTE_TIMEOUT_S = 300.0


def _call(operation: str, request: BaseModel, server: str | None) -> BaseModel:
    path, handler, response_type = _ENDPOINTS[operation]
    if server is None:
        return handler(request)
    url = server.rstrip("/") + path
    try:
        resp = httpx.post(url, json=request.model_dump(mode="json"), timeout=_REMOTE_TIMEOUT_S)
    except httpx.HTTPError as exc:
        raise ContractError(f"cannot reach server {server}: {exc}") from None
    if resp.status_code == 200:
        return response_type.model_validate(resp.json())
    try:
        envelope = schemas.ErrorEnvelope.model_validate(resp.json())
    except Exception:
        raise ContractError(
            f"server returned status {resp.status_code}: {resp.text[:200]}"
        ) from None
    raise error_from_category(envelope.error.category, envelope.error.message)


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise ContractError(f"cannot read {path}: {exc}") from None


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ContractError(f"cannot read {path}: {exc}") from None


def _write_bytes(path: str, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise ContractError(f"cannot write {path}: {exc}") from None


def _write_text(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ContractError(f"cannot write {path}: {exc}") from None


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _fmt(value: float) -> str:
    return format(value, ".10g")


def _cmd_compress(args: argparse.Namespace) -> None:
    req = schemas.CompressRequest(
        ppm_base64=_b64(_read_bytes(args.input)),
        mu=args.mu,
        seed=args.seed,
        psnr_formula=args.psnr_formula,
    )
    resp = _call("compress", req, args.server)
    assert isinstance(resp, schemas.CompressResponse)
    if args.out is not None:
        _write_bytes(args.out, base64.b64decode(resp.pqf_base64))
    print(
        f"{resp.width},{resp.height},{resp.mu},{resp.size_bytes},"
        f"{_fmt(resp.compression_ratio)},{resp.psnr_db},{_fmt(resp.mse)}"
    )


def _cmd_decompress(args: argparse.Namespace) -> None:
    req = schemas.DecompressRequest(pqf_base64=_b64(_read_bytes(args.input)))
    resp = _call("decompress", req, args.server)
    assert isinstance(resp, schemas.DecompressResponse)
    if args.out is not None:
        _write_bytes(args.out, base64.b64decode(resp.ppm_base64))
    print(f"{resp.width},{resp.height},{resp.mu}")


def _cmd_metrics(args: argparse.Namespace) -> None:
    req = schemas.MetricsRequest(
        reference_ppm_base64=_b64(_read_bytes(args.reference)),
        test_ppm_base64=_b64(_read_bytes(args.test)),
        psnr_formula=args.psnr_formula,
    )
    resp = _call("metrics", req, args.server)
    assert isinstance(resp, schemas.MetricsResponse)
    print(f"{_fmt(resp.mse)},{resp.psnr_db}")


def _cmd_fit(args: argparse.Namespace) -> None:
    req = schemas.FitRequest(
        history_csv=None if args.history is None else _read_text(args.history),
        psnr_min=args.psnr_min,
        psnr_max=args.psnr_max,
        cooks_rule=args.cooks_rule,
    )
    resp = _call("fit", req, args.server)
    assert isinstance(resp, schemas.FitResponse)
    if args.out is not None:
        _write_text(args.out, resp.model_csv)
    sys.stdout.write(resp.model_csv)
    print(f"# histogram_bin_edges={','.join(_fmt(v) for v in resp.histogram_bin_edges)}")
    print(f"# histogram_counts={','.join(str(c) for c in resp.histogram_counts)}")
    print(f"# qq_theoretical={','.join(_fmt(v) for v in resp.qq_theoretical)}")
    print(f"# qq_observed={','.join(_fmt(v) for v in resp.qq_observed)}")


def _cmd_decide(args: argparse.Namespace) -> None:
    req = schemas.DecideRequest(
        profile_text=_read_text(args.profile),
        nominal_kbps=args.nominal_kbps,
        theta_fraction=args.theta_fraction,
        default_psnr_db=args.default_psnr,
        table_csv=None if args.table is None else _read_text(args.table),
        model_csv=None if args.model is None else _read_text(args.model),
    )
    resp = _call("decide", req, args.server)
    assert isinstance(resp, schemas.DecideResponse)
    print(resp.decision_line)


def _cmd_gen_table(args: argparse.Namespace) -> None:
    req = schemas.GenTableRequest(
        history_csv=None if args.history is None else _read_text(args.history)
    )
    resp = _call("gen-table", req, args.server)
    assert isinstance(resp, schemas.GenTableResponse)
    if args.out is not None:
        _write_text(args.out, resp.table_csv)
    sys.stdout.write(resp.table_csv)


def _cmd_simulate(args: argparse.Namespace) -> None:
    frames_dir = Path(args.frames_dir)
    if not frames_dir.is_dir():
        raise ContractError(f"{args.frames_dir} is not a directory")
    frame_paths = sorted(frames_dir.glob("*.ppm"))
    if not frame_paths:
        raise ContractError(f"no *.ppm frames found in {args.frames_dir}")
    plan = LossPlan.from_text(args.loss)
    req = schemas.SimulateRequest(
        frames_ppm_base64=[_b64(_read_bytes(str(p))) for p in frame_paths],
        trace_csv=_read_text(args.trace),
        loss_frames=sorted(plan.frame_indices),
        qos_enabled=args.qos == "on",
        baseline_mu=args.baseline_mu,
        seed=args.seed,
        theta_fraction=args.theta_fraction,
        default_psnr_db=args.default_psnr,
        table_csv=None if args.table is None else _read_text(args.table),
        model_csv=None if args.model is None else _read_text(args.model),
        psnr_formula=args.psnr_formula,
    )
    resp = _call("simulate", req, args.server)
    assert isinstance(resp, schemas.SimulateResponse)
    if args.out is not None:
        _write_text(args.out, resp.report_csv)
    sys.stdout.write(resp.report_csv)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed for k-means init")
    common.add_argument(
        "--psnr-formula",
        choices=[f.value for f in PsnrFormula],
        default=PsnrFormula.CANONICAL.value,
        help="PSNR convention for reported values",
    )
    common.add_argument("--server", default=None, help="base URL of a running service")

    parser = argparse.ArgumentParser(
        prog="palstream",
        description="Palette compression and bandwidth-adaptive streaming tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", parents=[common], help="quantize a PPM into a PQF1 file")
    p.add_argument("input", help="source image (binary PPM)")
    p.add_argument("--mu", type=int, required=True, help="palette size, 2..256")
    p.add_argument("--out", default=None, help="destination PQF1 file")
    p.set_defaults(func=_cmd_compress)

    p = sub.add_parser("decompress", parents=[common], help="expand a PQF1 file back to PPM")
    p.add_argument("input", help="source PQF1 file")
    p.add_argument("--out", default=None, help="destination PPM file")
    p.set_defaults(func=_cmd_decompress)

    p = sub.add_parser("metrics", parents=[common], help="MSE/PSNR between two PPM images")
    p.add_argument("reference", help="reference image")
    p.add_argument("test", help="image to score against the reference")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("fit", parents=[common], help="fit the palette-size model to history")
    p.add_argument("history", nargs="?", default=None, help="history CSV (default: bundled)")
    p.add_argument("--psnr-min", type=float, default=25.0)
    p.add_argument("--psnr-max", type=float, default=50.0)
    p.add_argument("--cooks-rule", default="4overN", help="outlier threshold rule")
    p.add_argument("--out", default=None, help="also write the model CSV here")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("decide", parents=[common], help="pick transmission mode and palette size")
    p.add_argument("profile", help="device profile file (key=value lines)")
    p.add_argument("table", nargs="?", default=None, help="estimation table CSV (default: bundled)")
    p.add_argument("model", nargs="?", default=None, help="model CSV (default: bundled)")
    p.add_argument("--nominal-kbps", type=float, required=True, help="nominal link bandwidth")
    p.add_argument("--theta-fraction", type=float, default=0.8)
    p.add_argument("--default-psnr", type=float, default=30.0)
    p.set_defaults(func=_cmd_decide)

    p = sub.add_parser("gen-table", parents=[common], help="derive the estimation table")
    p.add_argument("history", nargs="?", default=None, help="history CSV (default: bundled)")
    p.add_argument("--out", default=None, help="also write the table CSV here")
    p.set_defaults(func=_cmd_gen_table)

    p = sub.add_parser("simulate", parents=[common], help="replay frames against a bandwidth trace")
    p.add_argument("frames_dir", help="directory of *.ppm frames, played in name order")
    p.add_argument("trace", help="bandwidth trace CSV")
    p.add_argument("--loss", default="", help="comma-separated frame indices lost in transit")
    p.add_argument("--qos", choices=("on", "off"), default="on")
    p.add_argument("--baseline-mu", type=int, default=128)
    p.add_argument("--theta-fraction", type=float, default=0.8)
    p.add_argument("--default-psnr", type=float, default=30.0)
    p.add_argument("--table", default=None, help="estimation table CSV (default: bundled)")
    p.add_argument("--model", default=None, help="model CSV (default: bundled)")
    p.add_argument("--out", default=None, help="also write the report CSV here")
    p.set_defaults(func=_cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except PalstreamError as exc:
        message = " ".join(str(exc).split())
        print(f"palstream: [{exc.category}] {message}", file=sys.stderr)
        return CATEGORY_EXIT_CODES[exc.category]
    return 0


if __name__ == "__main__":
    sys.exit(main())
