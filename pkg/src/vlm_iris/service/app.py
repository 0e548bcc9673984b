"""FastAPI application exposing the pipeline over HTTP.

Providers (notably loaded encoder graphs) are cached across requests, so a
long-running server amortizes graph loading over many clients.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import DataError, InputError
from . import handlers
from .schemas import (
    BuildCacheRequest,
    BuildCacheResponse,
    ClassifyRequest,
    ClassifyResponse,
    EvaluateRequest,
    EvaluateResponse,
    HealthResponse,
    PredictRequest,
    PredictResponse,
    PreprocessRequest,
    PreprocessResponse,
    SynthRequest,
    SynthResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="vlm-iris", version=__version__)

    @app.exception_handler(InputError)
    async def _input_error(request: Request, exc: InputError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(DataError)
    async def _data_error(request: Request, exc: DataError) -> JSONResponse:
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    @app.get("/healthz", response_model=HealthResponse)
    def healthz() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/v1/synth", response_model=SynthResponse)
    def synth(req: SynthRequest) -> SynthResponse:
        return handlers.run_synth(req)

    @app.post("/v1/preprocess", response_model=PreprocessResponse)
    def preprocess(req: PreprocessRequest) -> PreprocessResponse:
        return handlers.run_preprocess(req)

    @app.post("/v1/classify", response_model=ClassifyResponse)
    def classify(req: ClassifyRequest) -> ClassifyResponse:
        return handlers.run_classify(req)

    @app.post("/v1/evaluate", response_model=EvaluateResponse)
    def evaluate(req: EvaluateRequest) -> EvaluateResponse:
        return handlers.run_evaluate(req)

    @app.post("/v1/build-cache", response_model=BuildCacheResponse)
    def build_cache(req: BuildCacheRequest) -> BuildCacheResponse:
        return handlers.run_build_cache(req)

    @app.post("/v1/predict", response_model=PredictResponse)
    def predict(req: PredictRequest) -> PredictResponse:
        return handlers.run_predict(req)

    return app


app = create_app()
