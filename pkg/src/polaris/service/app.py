"""FastAPI application exposing the steering pipeline.

The service holds one profile store snapshot in application state, bootstrapped
via POST /profiles and replaced atomically on refresh. Decision, simulation and
evaluation endpoints read whatever snapshot is current, so concurrent readers
are never blocked by a refresh.

Run with:  uvicorn polaris.service.app:app
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..config import load_config
from ..errors import (
    FixedMechanismUnavailableError,
    InfeasibleTargetError,
    NoFeasibleMechanismError,
    PolarisError,
    ServiceStateError,
)
from ..profiling import ProfileStore
from . import handlers, schemas

_CONFLICT_ERRORS = (
    NoFeasibleMechanismError,
    FixedMechanismUnavailableError,
    InfeasibleTargetError,
    ServiceStateError,
)


def _http_status(exc: PolarisError) -> int:
    return 409 if isinstance(exc, _CONFLICT_ERRORS) else 400


def create_app() -> FastAPI:
    app = FastAPI(title="polaris steering service", version=__version__)
    app.state.store = None
    app.state.config = load_config()

    @app.exception_handler(PolarisError)
    async def _polaris_error(_: Request, exc: PolarisError) -> JSONResponse:
        return JSONResponse(
            status_code=_http_status(exc),
            content={"error": exc.code, "detail": str(exc)},
        )

    @app.exception_handler(ValueError)
    async def _value_error(_: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(
            status_code=400, content={"error": "INVALID_INPUT", "detail": str(exc)}
        )

    def current_store(request: Request) -> ProfileStore:
        store = request.app.state.store
        if store is None:
            raise ServiceStateError(
                "no profiles loaded; bootstrap via POST /profiles first"
            )
        return store

    @app.get("/health", response_model=schemas.HealthResponse)
    def health(request: Request) -> schemas.HealthResponse:
        store = request.app.state.store
        return schemas.HealthResponse(
            status="ok",
            version=__version__,
            profiles_loaded=store is not None,
            mechanisms=(
                [] if store is None else [m.value for m in sorted(store.profiles, key=lambda k: k.value)]
            ),
        )

    @app.post("/ingest", response_model=schemas.IngestResponse)
    def ingest(body: schemas.IngestRequest) -> schemas.IngestResponse:
        return handlers.ingest(body)

    @app.post("/generate", response_model=schemas.GenerateResponse)
    def generate(body: schemas.GenerateRequest) -> schemas.GenerateResponse:
        return handlers.generate(body)

    @app.post("/profiles", response_model=schemas.StoreSummaryResponse)
    def bootstrap(body: schemas.BootstrapRequest, request: Request):
        request.app.state.store = handlers.bootstrap_store(body)
        return handlers.store_summary(request.app.state.store)

    @app.get("/profiles", response_model=schemas.StoreModel)
    def profiles(request: Request) -> schemas.StoreModel:
        return handlers.store_to_model(current_store(request))

    @app.get("/profiles/summary", response_model=schemas.StoreSummaryResponse)
    def summary(request: Request) -> schemas.StoreSummaryResponse:
        return handlers.store_summary(current_store(request))

    @app.post("/profiles/refresh", response_model=schemas.StoreSummaryResponse)
    def refresh(body: schemas.RefreshRequest, request: Request):
        request.app.state.store = handlers.refresh_profiles(
            current_store(request), body
        )
        return handlers.store_summary(request.app.state.store)

    @app.post("/decision", response_model=schemas.DecisionResponse)
    def decision(body: schemas.DecisionRequest, request: Request):
        return handlers.decide(
            current_store(request), body, request.app.state.config
        )

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate(body: schemas.SimulateRequest, request: Request):
        return handlers.simulate(
            current_store(request), body, request.app.state.config
        )

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate(body: schemas.EvaluateRequest, request: Request):
        return handlers.run_evaluation(
            current_store(request), body, request.app.state.config
        )

    @app.post("/exceedance", response_model=schemas.ExceedanceResponse)
    def exceedance(body: schemas.ExceedanceRequest, request: Request):
        return handlers.exceedance(current_store(request), body)

    @app.post("/report", response_model=schemas.ReportBundle)
    def report(body: schemas.ReportRequest, request: Request):
        return handlers.report_bundle(current_store(request), body)

    return app


app = create_app()
