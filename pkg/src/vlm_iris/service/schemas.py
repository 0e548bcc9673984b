"""Pydantic request/response models shared by the HTTP API and the CLI."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

from ..colormaps import ColormapMode
from ..preprocess import PreprocessConfig

ColormapName = Literal["grayscale", "magma", "viridis"]
StrategyName = Literal["single", "centroid"]


class PreprocessParams(BaseModel):
    colormap: ColormapName = "grayscale"
    crop_fraction: float = 0.50
    size: int = 224
    clip_lo_pct: float = 0.0
    clip_hi_pct: float = 100.0

    def to_config(self) -> PreprocessConfig:
        return PreprocessConfig(
            colormap=ColormapMode(self.colormap),
            crop_fraction=self.crop_fraction,
            output_size=self.size,
            clip_lo_pct=self.clip_lo_pct,
            clip_hi_pct=self.clip_hi_pct,
        )


class ProviderSpec(BaseModel):
    kind: Literal["stub", "cache", "graph"] = "stub"
    seed: int = 0
    dim: int = 512
    cache_path: str | None = None
    bundle_dir: str | None = None


class SynthRequest(BaseModel):
    out_dir: str
    n_per_cell: int = 10
    seed: int = 0
    width: int = 160
    height: int = 128
    noise_sigma: float = 40.0


class SynthResponse(BaseModel):
    manifest_path: str
    n_records: int
    counts: dict[str, int]


class PreprocessRequest(BaseModel):
    manifest: str
    root: str | None = None
    params: PreprocessParams = Field(default_factory=PreprocessParams)
    out_dir: str
    jobs: int = 1


class PreprocessedImage(BaseModel):
    sample_id: str
    path: str
    png_sha256: str
    content_key: str


class PreprocessResponse(BaseModel):
    out_dir: str
    index_path: str
    config_token: str
    images: list[PreprocessedImage]


class ClassifyRequest(BaseModel):
    manifest: str
    root: str | None = None
    params: PreprocessParams = Field(default_factory=PreprocessParams)
    bank: str | None = None
    strategy: StrategyName = "centroid"
    provider: ProviderSpec = Field(default_factory=ProviderSpec)
    out: str
    skip_errors: bool = False
    jobs: int = 1


class FailureRecord(BaseModel):
    sample_id: str
    error: str


class ClassifyResponse(BaseModel):
    predictions_path: str
    n_predictions: int
    failures: list[FailureRecord]
    selected_prompts: dict[str, str] | None = None


class GridCell(BaseModel):
    colormap: ColormapName
    strategy: StrategyName


class EvaluateRequest(BaseModel):
    manifest: str
    root: str | None = None
    params: PreprocessParams = Field(default_factory=PreprocessParams)
    grid: list[GridCell] | None = None
    banks: dict[ColormapName, str] | None = None
    provider: ProviderSpec = Field(default_factory=ProviderSpec)
    out_dir: str
    jobs: int = 1


class EvaluateResponse(BaseModel):
    report_path: str
    table_path: str
    confusion_path: str
    n_rows: int
    n_failed_cells: int


class BuildCacheRequest(BaseModel):
    manifest: str
    root: str | None = None
    params: PreprocessParams = Field(default_factory=PreprocessParams)
    banks: list[str] | None = None
    provider: ProviderSpec = Field(default_factory=ProviderSpec)
    out: str
    jobs: int = 1


class BuildCacheResponse(BaseModel):
    cache_path: str
    n_entries: int
    dim: int
    provider_id: str


class PredictRequest(BaseModel):
    image: str
    params: PreprocessParams = Field(default_factory=PreprocessParams)
    bank: str | None = None
    strategy: StrategyName = "centroid"
    provider: ProviderSpec = Field(default_factory=ProviderSpec)


class PredictResponse(BaseModel):
    label: str
    score_present: float
    score_absent: float
    margin: float


class HealthResponse(BaseModel):
    status: str
    version: str
