"""Request handlers backing both the HTTP routes and the CLI.

Every handler takes a request model, does the work (reading and writing
files server-side), writes a run_config echo sufficient to reproduce the
run, and returns a response model.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from ..classify import classify_batch, classify_one, resolve_class_reps, write_predictions
from ..colormaps import ColormapMode
from ..dataset import DatasetManifest, load_manifest, summarize
from ..embed import (
    CacheProvider,
    EmbeddingProvider,
    GraphProvider,
    StubProvider,
    cache_read,
    cache_write,
    check_cache_compatible,
    image_content_key,
    l2_normalize,
    text_content_key,
)
from ..errors import InputError
from ..evaluation import FULL_GRID, evaluate_grid, render_report
from ..imageio import read_thermal, write_png_rgb
from ..preprocess import PreprocessConfig, preprocess_pipeline
from ..prompts import PromptBank, PromptingStrategy, default_bank, load_prompt_bank
from .schemas import (
    BuildCacheRequest,
    BuildCacheResponse,
    ClassifyRequest,
    ClassifyResponse,
    EvaluateRequest,
    EvaluateResponse,
    FailureRecord,
    PredictRequest,
    PredictResponse,
    PreprocessedImage,
    PreprocessRequest,
    PreprocessResponse,
    SynthRequest,
    SynthResponse,
)

_graph_providers: dict[str, GraphProvider] = {}


def build_provider(spec, config_token: str) -> EmbeddingProvider:
    if spec.kind == "stub":
        return StubProvider(seed=spec.seed, dim=spec.dim)
    if spec.kind == "cache":
        if not spec.cache_path:
            raise InputError("cache provider requires cache_path")
        return CacheProvider(cache_read(spec.cache_path), config_token=config_token)
    if spec.kind == "graph":
        if not spec.bundle_dir:
            raise InputError("graph provider requires bundle_dir")
        key = str(Path(spec.bundle_dir).resolve())
        if key not in _graph_providers:
            _graph_providers[key] = GraphProvider(spec.bundle_dir)
        return _graph_providers[key]
    raise InputError(f"unknown provider kind {spec.kind!r}")


def resolve_bank(path: str | None, colormap: ColormapMode) -> PromptBank:
    if path is None:
        return default_bank(colormap)
    return load_prompt_bank(path)


def write_run_config(request: BaseModel, target: str | Path) -> Path:
    """Echo the full request next to its primary output: <target>.run_config.json
    for files, <target>/run_config.json for directories."""
    target = Path(target)
    if target.is_dir():
        echo = target / "run_config.json"
    else:
        echo = target.parent / (target.name + ".run_config.json")
    echo.write_text(request.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return echo


def _load_manifest(path: str, root: str | None) -> DatasetManifest:
    return load_manifest(path, root=root)


def run_synth(req: SynthRequest) -> SynthResponse:
    from ..synth import generate_dataset

    manifest, manifest_path = generate_dataset(
        out_dir=req.out_dir,
        n_per_cell=req.n_per_cell,
        seed=req.seed,
        width=req.width,
        height=req.height,
        noise_sigma=req.noise_sigma,
    )
    write_run_config(req, req.out_dir)
    counts = {
        f"{label.value}/{cond.value}": n
        for (label, cond), n in summarize(manifest).items()
    }
    return SynthResponse(
        manifest_path=str(manifest_path), n_records=len(manifest), counts=counts
    )


def run_preprocess(req: PreprocessRequest) -> PreprocessResponse:
    manifest = _load_manifest(req.manifest, req.root)
    cfg = req.params.to_config()
    out_dir = Path(req.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    images: list[PreprocessedImage] = []
    for rec in manifest.records:
        rgb = preprocess_pipeline(read_thermal(manifest.resolve_path(rec)), cfg)
        png_path = out_dir / f"{rec.sample_id}.png"
        write_png_rgb(rgb, png_path)
        images.append(
            PreprocessedImage(
                sample_id=rec.sample_id,
                path=str(png_path),
                png_sha256=hashlib.sha256(png_path.read_bytes()).hexdigest(),
                content_key=image_content_key(rgb.tobytes(), cfg.token()).hex(),
            )
        )

    # index paths are relative to the index's own directory, so reruns into
    # different roots stay byte-identical
    index = {
        "config_token": cfg.token(),
        "images": [
            dict(img.model_dump(), path=Path(img.path).name) for img in images
        ],
    }
    index_path = out_dir / "index.json"
    index_path.write_text(json.dumps(index, indent=2, sort_keys=True) + "\n", "utf-8")
    write_run_config(req, out_dir)
    return PreprocessResponse(
        out_dir=str(out_dir),
        index_path=str(index_path),
        config_token=cfg.token(),
        images=images,
    )


def run_classify(req: ClassifyRequest) -> ClassifyResponse:
    manifest = _load_manifest(req.manifest, req.root)
    cfg = req.params.to_config()
    bank = resolve_bank(req.bank, cfg.colormap)
    provider = build_provider(req.provider, cfg.token())
    result = classify_batch(
        manifest,
        cfg,
        provider,
        PromptingStrategy(kind=req.strategy),
        bank,
        skip_errors=req.skip_errors,
        jobs=req.jobs,
    )
    out = Path(req.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_predictions(result.predictions, out)
    write_run_config(req, out)
    selected = None
    if result.strategy.kind == "single" and result.strategy.chosen is not None:
        selected = {lb.value: p for lb, p in result.strategy.chosen.items()}
    return ClassifyResponse(
        predictions_path=str(out),
        n_predictions=len(result.predictions),
        failures=[FailureRecord(sample_id=f.sample_id, error=f.error) for f in result.failures],
        selected_prompts=selected,
    )


def run_evaluate(req: EvaluateRequest) -> EvaluateResponse:
    manifest = _load_manifest(req.manifest, req.root)
    cfg = req.params.to_config()
    if req.grid is None:
        grid = list(FULL_GRID)
    else:
        grid = [(ColormapMode(c.colormap), c.strategy) for c in req.grid]

    banks: dict[ColormapMode, PromptBank] = {}
    for colormap, _ in grid:
        if colormap in banks:
            continue
        path = None if req.banks is None else req.banks.get(colormap.value)
        banks[colormap] = resolve_bank(path, colormap)

    provider = build_provider(req.provider, cfg.token())
    report = evaluate_grid(manifest, grid, provider, banks, cfg=cfg, jobs=req.jobs)

    out_dir = Path(req.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "report.json"
    table_path = out_dir / "report.txt"
    confusion_path = out_dir / "confusion.txt"
    report_path.write_bytes(render_report(report, "json"))
    table_path.write_bytes(render_report(report, "table"))
    confusion_path.write_bytes(render_report(report, "confusion"))
    write_run_config(req, out_dir)
    n_failed = sum(1 for cell in report.rows.values() if cell.error is not None)
    return EvaluateResponse(
        report_path=str(report_path),
        table_path=str(table_path),
        confusion_path=str(confusion_path),
        n_rows=len(report.rows),
        n_failed_cells=n_failed,
    )


def run_build_cache(req: BuildCacheRequest) -> BuildCacheResponse:
    manifest = _load_manifest(req.manifest, req.root)
    cfg = req.params.to_config()
    if req.provider.kind == "cache":
        raise InputError("build-cache needs a stub or graph provider, not cache")
    provider = build_provider(req.provider, cfg.token())

    if req.banks is None:
        banks = [default_bank(cfg.colormap)]
    else:
        banks = [load_prompt_bank(p) for p in req.banks]

    entries: dict[bytes, np.ndarray] = {}
    token = cfg.token()
    for rec in manifest.records:
        rgb = preprocess_pipeline(read_thermal(manifest.resolve_path(rec)), cfg)
        entries[image_content_key(rgb.tobytes(), token)] = provider.embed_image(rgb)
    for bank in banks:
        for prompts in bank.prompts.values():
            for prompt in prompts:
                entries[text_content_key(prompt)] = provider.embed_text(prompt)

    out = Path(req.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if out.exists():
        check_cache_compatible(cache_read(out), provider.dim())
    cache_write(out, entries, dim=provider.dim(), provider_id=provider.provider_id)
    write_run_config(req, out)
    return BuildCacheResponse(
        cache_path=str(out),
        n_entries=len(entries),
        dim=provider.dim(),
        provider_id=provider.provider_id,
    )


def run_predict(req: PredictRequest) -> PredictResponse:
    cfg = req.params.to_config()
    bank = resolve_bank(req.bank, cfg.colormap)
    provider = build_provider(req.provider, cfg.token())
    if req.strategy == "single":
        raise InputError(
            "single-prompt strategy needs a manifest for selection; use classify"
        )
    reps = resolve_class_reps(bank, provider, PromptingStrategy(kind="centroid"))
    rgb = preprocess_pipeline(read_thermal(req.image), cfg)
    emb = l2_normalize(provider.embed_image(rgb))
    pred = classify_one(emb, reps, sample_id=Path(req.image).name)
    return PredictResponse(
        label=pred.label.value,
        score_present=pred.score_present,
        score_absent=pred.score_absent,
        margin=pred.margin,
    )
