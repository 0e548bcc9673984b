"""Export bundles: traced encoder graphs + tokenizer assets + metadata.

Bundle layout:

    image_encoder.pt   TorchScript graph, raw [0,1] RGB in, embedding out
    text_encoder.pt    TorchScript graph, padded token ids in, embedding out
    tokenizer/         tokenizer assets (save_pretrained format)
    metadata.json      dim, input_size, context_length, provider_id,
                       per-file sha256 checksums, parity probe results

Export runs a parity probe comparing the reloaded graphs against the source
model on fixed inputs; the export fails if max |diff| exceeds the bound.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .towers import load_model, trace_towers

PARITY_BOUND = 1e-4

PROBE_TEXTS = (
    "a photo",
    "an infrared image of a bright surface",
    "a solid object resting on a plate",
    "an empty platform",
    "thermal view of a heated bed",
)


def probe_images(input_size: int, count: int = 5) -> np.ndarray:
    """Deterministic uint8 probe frames: seeded noise plus gradients."""
    rng = np.random.default_rng(20240501)
    frames = []
    ramp = np.linspace(0, 255, input_size)
    for i in range(count):
        noise = rng.integers(0, 256, (input_size, input_size, 3))
        grad = np.add.outer(ramp, ramp[::-1])[..., None] / 2.0
        frames.append(((noise * (i + 1) / count + grad) % 256).astype(np.uint8))
    return np.stack(frames)


def _to_feature_tensor(result) -> torch.Tensor:
    # transformers returns a bare tensor (<=4.x) or a ModelOutput (5.x)
    if isinstance(result, torch.Tensor):
        return result
    return result.pooler_output


def _source_image_features(model, raw01: torch.Tensor) -> torch.Tensor:
    from .towers import CLIP_IMAGE_MEAN, CLIP_IMAGE_STD

    mean = torch.tensor(CLIP_IMAGE_MEAN).view(1, 3, 1, 1)
    std = torch.tensor(CLIP_IMAGE_STD).view(1, 3, 1, 1)
    with torch.no_grad():
        return _to_feature_tensor(
            model.get_image_features(pixel_values=(raw01 - mean) / std)
        )


def _source_text_features(model, ids: torch.Tensor) -> torch.Tensor:
    with torch.no_grad():
        return _to_feature_tensor(model.get_text_features(input_ids=ids))


@dataclass(frozen=True)
class ParityResult:
    max_abs_diff_image: float
    max_abs_diff_text: float
    n_items: int

    @property
    def max_abs_diff(self) -> float:
        return max(self.max_abs_diff_image, self.max_abs_diff_text)


def run_parity_probe(model, tokenizer, image_graph, text_graph,
                     input_size: int, context_length: int) -> ParityResult:
    frames = probe_images(input_size)
    image_diff = 0.0
    for frame in frames:
        raw = torch.from_numpy(frame.astype(np.float32) / 255.0)
        raw = raw.permute(2, 0, 1).unsqueeze(0)
        want = _source_image_features(model, raw)
        with torch.no_grad():
            got = image_graph(raw)
        image_diff = max(image_diff, float((want - got).abs().max()))

    text_diff = 0.0
    for text in PROBE_TEXTS:
        ids = tokenizer(
            text, padding="max_length", truncation=True,
            max_length=context_length, return_tensors="pt",
        )["input_ids"]
        want = _source_text_features(model, ids)
        with torch.no_grad():
            got = text_graph(ids)
        text_diff = max(text_diff, float((want - got).abs().max()))

    return ParityResult(
        max_abs_diff_image=image_diff,
        max_abs_diff_text=text_diff,
        n_items=len(frames) + len(PROBE_TEXTS),
    )


def _checksum_tree(root: Path) -> dict[str, str]:
    sums = {}
    for path in sorted(root.rglob("*")):
        if path.is_file() and path.name != "metadata.json":
            rel = path.relative_to(root).as_posix()
            sums[rel] = hashlib.sha256(path.read_bytes()).hexdigest()
    return sums


def export_encoders(source: str, out_dir: str | Path,
                    provider_id: str | None = None) -> Path:
    """Export a CLIP checkpoint to a bundle directory; returns the metadata
    path. Fails if the reloaded graphs drift from the source model."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model, tokenizer = load_model(source)
    input_size = int(model.config.vision_config.image_size)
    context_length = int(model.config.text_config.max_position_embeddings)
    dim = int(model.config.projection_dim)

    image_graph, text_graph = trace_towers(model, input_size, context_length)
    image_graph.save(str(out / "image_encoder.pt"))
    text_graph.save(str(out / "text_encoder.pt"))
    tokenizer.save_pretrained(str(out / "tokenizer"))

    # parity is measured on the graphs as reloaded from disk
    reloaded_image = torch.jit.load(str(out / "image_encoder.pt"))
    reloaded_text = torch.jit.load(str(out / "text_encoder.pt"))
    parity = run_parity_probe(
        model, tokenizer, reloaded_image, reloaded_text, input_size, context_length
    )
    if parity.max_abs_diff >= PARITY_BOUND:
        raise RuntimeError(
            f"export parity failure: max |diff| {parity.max_abs_diff:.3e} "
            f">= {PARITY_BOUND:.0e}"
        )

    with torch.no_grad():
        probe = reloaded_image(torch.zeros(1, 3, input_size, input_size))
    if probe.shape != (1, dim):
        raise RuntimeError(
            f"exported image graph emits {tuple(probe.shape)}, expected (1, {dim})"
        )

    meta = {
        "provider_id": provider_id or f"clip-{source}-torchscript",
        "source": source,
        "dim": dim,
        "input_size": input_size,
        "context_length": context_length,
        "image_standardization": "baked into image_encoder.pt (raw [0,1] RGB in)",
        "parity": {
            "max_abs_diff_image": parity.max_abs_diff_image,
            "max_abs_diff_text": parity.max_abs_diff_text,
            "n_items": parity.n_items,
            "bound": PARITY_BOUND,
        },
        "checksums": _checksum_tree(out),
    }
    meta_path = out / "metadata.json"
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", "utf-8")
    return meta_path


def verify_bundle(bundle_dir: str | Path) -> dict:
    """Checksum and loadability verification; returns the metadata."""
    bundle = Path(bundle_dir)
    meta = json.loads((bundle / "metadata.json").read_text("utf-8"))
    for rel, expected in meta["checksums"].items():
        target = bundle / rel
        if not target.exists():
            raise RuntimeError(f"bundle file missing: {rel}")
        actual = hashlib.sha256(target.read_bytes()).hexdigest()
        if actual != expected:
            raise RuntimeError(f"checksum mismatch for {rel}")
    image_graph = torch.jit.load(str(bundle / "image_encoder.pt"))
    with torch.no_grad():
        out = image_graph(torch.zeros(1, 3, meta["input_size"], meta["input_size"]))
    if out.shape != (1, meta["dim"]):
        raise RuntimeError("image graph output does not match metadata dim")
    return meta
