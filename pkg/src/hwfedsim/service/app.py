"""FastAPI service exposing the simulator as run/compare/sweep jobs.

Jobs are synchronous and deterministic: the response carries every artifact
file (content plus sha256) so clients can persist them wherever they like.
Config problems surface as 400/422 with field-path detail; anything else that
goes wrong during a run is a 500.
"""

from __future__ import annotations

from importlib.metadata import version as pkg_version

from fastapi import FastAPI, HTTPException

from ..config import RunConfig
from ..reporting import (
    JobResult,
    execute_compare,
    execute_run,
    execute_sweep_k,
    execute_sweep_weights,
)
from .schemas import (
    ArtifactModel,
    HealthResponse,
    JobRequest,
    JobResponse,
    SweepKRequest,
    SweepWeightsRequest,
)


def _apply_seed_override(request: JobRequest) -> RunConfig:
    cfg = request.config
    if request.seeds is not None:
        cfg = cfg.model_copy(update={"seeds": request.seeds})
        cfg = RunConfig.model_validate(cfg.model_dump(by_alias=True))
    return cfg


def _to_response(result: JobResult) -> JobResponse:
    return JobResponse(
        kind=result.kind,
        resolved=result.resolved,
        files=[
            ArtifactModel(name=f.name, content=f.content, sha256=f.sha256)
            for f in result.files
        ],
        table=result.table,
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="hwfedsim",
        description="Hardware-aware federated learning scheduling simulator",
    )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(version=pkg_version("hwfedsim"))

    @app.get("/defaults", response_model=RunConfig, response_model_by_alias=True)
    def defaults() -> RunConfig:
        return RunConfig()

    @app.post("/run", response_model=JobResponse)
    def run(request: JobRequest) -> JobResponse:
        return _execute(execute_run, request)

    @app.post("/compare", response_model=JobResponse)
    def compare(request: JobRequest) -> JobResponse:
        return _execute(execute_compare, request)

    @app.post("/sweep/k", response_model=JobResponse)
    def sweep_k(request: SweepKRequest) -> JobResponse:
        return _execute(lambda c: execute_sweep_k(c, request.k_values), request)

    @app.post("/sweep/weights", response_model=JobResponse)
    def sweep_weights(request: SweepWeightsRequest) -> JobResponse:
        return _execute(lambda c: execute_sweep_weights(c, request.alpha_values), request)

    return app


def _execute(job, request: JobRequest) -> JobResponse:
    # pydantic's ValidationError subclasses ValueError, so override problems
    # and semantic config problems both surface as 400s with detail text.
    try:
        result = job(_apply_seed_override(request))
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return _to_response(result)


app = create_app()
