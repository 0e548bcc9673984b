"""`iris` command-line interface.

A thin client over the service layer: each subcommand builds the same
request model the HTTP API accepts and either calls the handler in-process
(default) or POSTs it to a running server (--server URL). Exit codes:
0 success, 1 validation error, 2 runtime/data error.
"""

from __future__ import annotations

import json
import os
import sys
from typing import Callable

import click
from pydantic import BaseModel

from .errors import DataError, InputError
from .service import handlers
from .service.schemas import (
    BuildCacheRequest,
    ClassifyRequest,
    EvaluateRequest,
    GridCell,
    PreprocessParams,
    PreprocessRequest,
    ProviderSpec,
    SynthRequest,
)

EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

COLORMAPS = ("grayscale", "magma", "viridis")
STRATEGIES = ("single", "centroid")


def _default_root() -> str | None:
    return os.environ.get("IRIS_DATA_DIR") or None


def _dispatch(ctx: click.Context, endpoint: str, req: BaseModel, handler: Callable):
    """Run in-process, or POST the request to --server."""
    server = ctx.obj.get("server")
    try:
        if server is None:
            return handler(req)
        import httpx

        resp = httpx.post(
            f"{server.rstrip('/')}/v1/{endpoint}",
            json=req.model_dump(),
            timeout=600.0,
        )
        if resp.status_code == 400:
            raise InputError(resp.json().get("detail", resp.text))
        if resp.status_code >= 300:
            try:
                detail = resp.json().get("detail", resp.text)
            except Exception:
                detail = resp.text
            raise DataError(detail)
        return resp.json()
    except InputError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except DataError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    except Exception as exc:  # unexpected runtime failure
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)


def _emit(result) -> None:
    payload = result.model_dump() if isinstance(result, BaseModel) else result
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


def provider_options(fn):
    fn = click.option(
        "--provider",
        "provider_kind",
        type=click.Choice(["stub", "cache", "graph"]),
        default="stub",
        show_default=True,
        help="Embedding provider.",
    )(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True,
                      help="Stub provider seed.")(fn)
    fn = click.option("--dim", type=int, default=512, show_default=True,
                      help="Stub provider embedding width.")(fn)
    fn = click.option("--cache-path", type=str, default=None,
                      help="Cache file for --provider cache.")(fn)
    fn = click.option("--bundle-dir", type=str, default=None,
                      help="Export bundle directory for --provider graph.")(fn)
    return fn


def preprocess_options(fn):
    fn = click.option("--colormap", type=click.Choice(COLORMAPS), default="grayscale",
                      show_default=True)(fn)
    fn = click.option("--crop-fraction", type=float, default=0.50, show_default=True)(fn)
    fn = click.option("--size", type=int, default=224, show_default=True)(fn)
    fn = click.option("--clip-lo-pct", type=float, default=0.0, show_default=True)(fn)
    fn = click.option("--clip-hi-pct", type=float, default=100.0, show_default=True)(fn)
    return fn


def _params(colormap, crop_fraction, size, clip_lo_pct, clip_hi_pct) -> PreprocessParams:
    return PreprocessParams(
        colormap=colormap,
        crop_fraction=crop_fraction,
        size=size,
        clip_lo_pct=clip_lo_pct,
        clip_hi_pct=clip_hi_pct,
    )


def _provider(provider_kind, seed, dim, cache_path, bundle_dir) -> ProviderSpec:
    return ProviderSpec(
        kind=provider_kind,
        seed=seed,
        dim=dim,
        cache_path=cache_path,
        bundle_dir=bundle_dir,
    )


@click.group()
@click.option("--server", type=str, default=None,
              help="Base URL of a running iris server; default runs in-process.")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Zero-shot thermal-image classification toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command()
@click.option("--out", required=True, help="Output dataset directory.")
@click.option("--n-per-cell", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--width", type=int, default=160, show_default=True)
@click.option("--height", type=int, default=128, show_default=True)
@click.option("--noise-sigma", type=float, default=40.0, show_default=True)
@click.pass_context
def synth(ctx, out, n_per_cell, seed, width, height, noise_sigma):
    """Generate a synthetic thermal dataset with a manifest."""
    req = SynthRequest(
        out_dir=out, n_per_cell=n_per_cell, seed=seed,
        width=width, height=height, noise_sigma=noise_sigma,
    )
    _emit(_dispatch(ctx, "synth", req, handlers.run_synth))


@main.command()
@click.option("--manifest", required=True)
@click.option("--root", default=None, help="Dataset root (default: IRIS_DATA_DIR or manifest header).")
@preprocess_options
@click.option("--out", required=True, help="Output directory for PNGs and index.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.pass_context
def preprocess(ctx, manifest, root, colormap, crop_fraction, size,
               clip_lo_pct, clip_hi_pct, out, jobs):
    """Convert manifest images to model-ready RGB PNGs."""
    req = PreprocessRequest(
        manifest=manifest,
        root=root or _default_root(),
        params=_params(colormap, crop_fraction, size, clip_lo_pct, clip_hi_pct),
        out_dir=out,
        jobs=jobs,
    )
    _emit(_dispatch(ctx, "preprocess", req, handlers.run_preprocess))


@main.command()
@click.option("--manifest", required=True)
@click.option("--root", default=None)
@preprocess_options
@click.option("--bank", default=None, help="Prompt bank file (default: shipped bank for the colormap).")
@click.option("--strategy", type=click.Choice(STRATEGIES), default="centroid", show_default=True)
@provider_options
@click.option("--out", required=True, help="Predictions file (JSON lines).")
@click.option("--skip-errors", is_flag=True, default=False,
              help="Record per-image failures and continue.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.pass_context
def classify(ctx, manifest, root, colormap, crop_fraction, size, clip_lo_pct,
             clip_hi_pct, bank, strategy, provider_kind, seed, dim, cache_path,
             bundle_dir, out, skip_errors, jobs):
    """Classify every manifest image; write predictions."""
    req = ClassifyRequest(
        manifest=manifest,
        root=root or _default_root(),
        params=_params(colormap, crop_fraction, size, clip_lo_pct, clip_hi_pct),
        bank=bank,
        strategy=strategy,
        provider=_provider(provider_kind, seed, dim, cache_path, bundle_dir),
        out=out,
        skip_errors=skip_errors,
        jobs=jobs,
    )
    _emit(_dispatch(ctx, "classify", req, handlers.run_classify))


@main.command()
@click.option("--manifest", required=True)
@click.option("--root", default=None)
@preprocess_options
@click.option("--grid", "grid_spec", default=None,
              help="Comma-separated colormap:strategy cells, e.g. "
                   "'magma:centroid,grayscale:single'. Default: full 3x2 grid.")
@click.option("--bank", "banks", multiple=True,
              help="colormap=path prompt bank override; repeatable.")
@provider_options
@click.option("--out", required=True, help="Output directory for report files.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.pass_context
def evaluate(ctx, manifest, root, colormap, crop_fraction, size, clip_lo_pct,
             clip_hi_pct, grid_spec, banks, provider_kind, seed, dim,
             cache_path, bundle_dir, out, jobs):
    """Evaluate the preprocessing x prompting grid; write report files."""
    grid = None
    if grid_spec:
        grid = []
        for cell in grid_spec.split(","):
            try:
                cm, strat = cell.strip().split(":")
                grid.append(GridCell(colormap=cm, strategy=strat))
            except Exception:
                raise click.UsageError(f"bad grid cell {cell!r} (want colormap:strategy)")
    bank_map = None
    if banks:
        bank_map = {}
        for item in banks:
            try:
                cm, path = item.split("=", 1)
            except ValueError:
                raise click.UsageError(f"bad --bank {item!r} (want colormap=path)")
            bank_map[cm] = path
    req = EvaluateRequest(
        manifest=manifest,
        root=root or _default_root(),
        params=_params(colormap, crop_fraction, size, clip_lo_pct, clip_hi_pct),
        grid=grid,
        banks=bank_map,
        provider=_provider(provider_kind, seed, dim, cache_path, bundle_dir),
        out_dir=out,
        jobs=jobs,
    )
    _emit(_dispatch(ctx, "evaluate", req, handlers.run_evaluate))


@main.command("build-cache")
@click.option("--manifest", required=True)
@click.option("--root", default=None)
@preprocess_options
@click.option("--bank", "banks", multiple=True,
              help="Prompt bank file(s) to embed; default: shipped bank for the colormap.")
@provider_options
@click.option("--out", required=True, help="Cache file path.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.pass_context
def build_cache(ctx, manifest, root, colormap, crop_fraction, size, clip_lo_pct,
                clip_hi_pct, banks, provider_kind, seed, dim, cache_path,
                bundle_dir, out, jobs):
    """Embed all manifest images and bank prompts into a cache file."""
    req = BuildCacheRequest(
        manifest=manifest,
        root=root or _default_root(),
        params=_params(colormap, crop_fraction, size, clip_lo_pct, clip_hi_pct),
        banks=list(banks) or None,
        provider=_provider(provider_kind, seed, dim, cache_path, bundle_dir),
        out=out,
        jobs=jobs,
    )
    _emit(_dispatch(ctx, "build-cache", req, handlers.run_build_cache))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("vlm_iris.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
