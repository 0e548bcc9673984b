"""`iris-export` command line: export encoder bundles and precompute caches."""

from __future__ import annotations

import json
import sys

import click

from .bundle import export_encoders, verify_bundle
from .cachefile import build_cache_from_bundle


@click.group()
def main() -> None:
    """Export CLIP encoders and build embedding caches for the iris toolkit."""


@main.command()
@click.option("--model", "source", default="openai/clip-vit-base-patch32",
              show_default=True,
              help="Checkpoint id or local path; 'toy' builds an offline stand-in.")
@click.option("--out", required=True, help="Bundle output directory.")
@click.option("--provider-id", default=None, help="Override the recorded provider id.")
def export(source, out, provider_id):
    """Export image/text encoders to a TorchScript bundle (with parity probe)."""
    try:
        meta_path = export_encoders(source, out, provider_id=provider_id)
    except Exception as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    meta = json.loads(meta_path.read_text())
    click.echo(json.dumps({
        "bundle": out,
        "dim": meta["dim"],
        "input_size": meta["input_size"],
        "parity_max_abs_diff": max(
            meta["parity"]["max_abs_diff_image"], meta["parity"]["max_abs_diff_text"]
        ),
    }, indent=2))


@main.command()
@click.option("--bundle", required=True, help="Bundle directory from `export`.")
def verify(bundle):
    """Re-check bundle checksums and graph loadability."""
    try:
        meta = verify_bundle(bundle)
    except Exception as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(json.dumps({"ok": True, "provider_id": meta["provider_id"],
                           "dim": meta["dim"]}, indent=2))


@main.command("build-cache")
@click.option("--bundle", required=True, help="Bundle directory from `export`.")
@click.option("--index", required=True,
              help="index.json written by `iris preprocess`.")
@click.option("--bank", "banks", multiple=True, required=True,
              help="Prompt bank file(s); repeatable.")
@click.option("--out", required=True, help="Cache file to write.")
def build_cache(bundle, index, banks, out):
    """Embed preprocessed images + bank prompts into an embedding cache."""
    try:
        result = build_cache_from_bundle(bundle, index, list(banks), out)
    except Exception as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(json.dumps(result, indent=2))


if __name__ == "__main__":
    main()
