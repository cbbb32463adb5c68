"""HTTP wiring for the palstream operations.

Every domain error maps to HTTP 400 with a ``{"error": {"category",
"message"}}`` body; the category names the same buckets the CLI turns into
exit codes (usage, format, numeric, infeasible).  Malformed request bodies are
reported as category ``usage``.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import PalstreamError
from . import handlers, schemas


def _error_response(category: str, message: str) -> JSONResponse:
    body = schemas.ErrorEnvelope(
        error=schemas.ErrorBody(category=category, message=message)
    )
    return JSONResponse(status_code=400, content=body.model_dump())


def create_app() -> FastAPI:
    app = FastAPI(title="palstream", version=__version__)

    @app.exception_handler(PalstreamError)
    async def _domain_error(_request: Request, exc: PalstreamError) -> JSONResponse:
        return _error_response(exc.category, str(exc))

    @app.exception_handler(RequestValidationError)
    async def _validation_error(
        _request: Request, exc: RequestValidationError
    ) -> JSONResponse:
        first = exc.errors()[0] if exc.errors() else {}
        loc = ".".join(str(part) for part in first.get("loc", ()))
        msg = first.get("msg", "invalid request body")
        return _error_response("usage", f"{loc}: {msg}" if loc else msg)

    @app.get("/v1/health")
    async def health() -> dict[str, str]:
        return {"status": "ok", "version": __version__}

    @app.post("/v1/compress", response_model=schemas.CompressResponse)
    async def compress(req: schemas.CompressRequest) -> schemas.CompressResponse:
        return handlers.compress(req)

    @app.post("/v1/decompress", response_model=schemas.DecompressResponse)
    async def decompress(req: schemas.DecompressRequest) -> schemas.DecompressResponse:
        return handlers.decompress(req)

    @app.post("/v1/metrics", response_model=schemas.MetricsResponse)
    async def compute_metrics(req: schemas.MetricsRequest) -> schemas.MetricsResponse:
        return handlers.compute_metrics(req)

    @app.post("/v1/fit", response_model=schemas.FitResponse)
    async def fit(req: schemas.FitRequest) -> schemas.FitResponse:
        return handlers.fit(req)

    @app.post("/v1/decide", response_model=schemas.DecideResponse)
    async def decide(req: schemas.DecideRequest) -> schemas.DecideResponse:
        return handlers.decide(req)

    @app.post("/v1/gen-table", response_model=schemas.GenTableResponse)
    async def gen_table(req: schemas.GenTableRequest) -> schemas.GenTableResponse:
        return handlers.gen_table(req)

    @app.post("/v1/simulate", response_model=schemas.SimulateResponse)
    async def simulate(req: schemas.SimulateRequest) -> schemas.SimulateResponse:
        return handlers.simulate(req)

    return app


app = create_app()
