"""Request and response bodies for the experiment service."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from ..config import RunConfig


class HealthResponse(BaseModel):
    status: str = "ok"
    name: str = "hwfedsim"
    version: str


class JobRequest(BaseModel):
    """One experiment job: a full config document plus optional overrides."""

    model_config = ConfigDict(extra="forbid")

    config: RunConfig
    seeds: list[int] | None = Field(
        default=None, description="Override the config's trial seeds."
    )


class SweepKRequest(JobRequest):
    k_values: list[int] | None = Field(
        default=None, description="Override the config's k_values."
    )


class SweepWeightsRequest(JobRequest):
    alpha_values: list[float] | None = Field(
        default=None, description="Override the config's alpha_values."
    )


class ArtifactModel(BaseModel):
    name: str
    content: str
    sha256: str


class JobResponse(BaseModel):
    kind: str
    resolved: list[dict]
    files: list[ArtifactModel]
    table: str | None = None
