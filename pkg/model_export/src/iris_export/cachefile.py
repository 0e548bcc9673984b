"""Embedding cache writer, byte-compatible with the vlm-iris cache format.

The format and the content-key rules are re-implemented here on purpose (no
import of the main package); compatibility is pinned by golden tests. Layout
(integers little-endian):

    magic "IRIS" | format_version u32 | dim u32 |
    provider_id: u32 length + utf-8 | entry_count u64 |
    entries: 32-byte sha256 key + dim x float32

Image keys: sha256(config_token + NUL + raw interleaved RGB bytes), where
config_token comes from the preprocess index. Text keys: sha256(utf-8 text).
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CACHE_MAGIC = b"IRIS"
CACHE_FORMAT_VERSION = 1


def image_key(rgb_bytes: bytes, config_token: str) -> bytes:
    h = hashlib.sha256()
    h.update(config_token.encode("utf-8"))
    h.update(b"\x00")
    h.update(rgb_bytes)
    return h.digest()


def text_key(text: str) -> bytes:
    return hashlib.sha256(text.encode("utf-8")).digest()


def write_cache(path: str | Path, entries: dict[bytes, np.ndarray],
                dim: int, provider_id: str) -> Path:
    path = Path(path)
    pid = provider_id.encode("utf-8")
    with path.open("wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<II", CACHE_FORMAT_VERSION, dim))
        fh.write(struct.pack("<I", len(pid)))
        fh.write(pid)
        fh.write(struct.pack("<Q", len(entries)))
        for key, vec in entries.items():
            if len(key) != 32:
                raise ValueError(f"key must be 32 bytes, got {len(key)}")
            arr = np.asarray(vec, dtype="<f4")
            if arr.shape != (dim,):
                raise ValueError(f"vector shape {arr.shape} != ({dim},)")
            fh.write(key)
            fh.write(arr.tobytes())
    return path


@dataclass(frozen=True)
class PreprocessIndex:
    config_token: str
    images: list[dict]
    base_dir: Path


def read_index(path: str | Path) -> PreprocessIndex:
    path = Path(path)
    doc = json.loads(path.read_text("utf-8"))
    return PreprocessIndex(
        config_token=doc["config_token"],
        images=doc["images"],
        base_dir=path.parent,
    )


def read_bank_prompts(path: str | Path) -> list[str]:
    """All prompts from a bank file, both classes, file order."""
    prompts: list[str] = []
    in_section = False
    for raw in Path(path).read_text("utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("bank_version:") or line.startswith("variant:"):
            continue
        if line.startswith("[") and line.endswith("]"):
            in_section = True
            continue
        if in_section:
            if line not in prompts:
                prompts.append(line)
    if not prompts:
        raise ValueError(f"{path}: no prompts found")
    return prompts


def load_rgb_bytes(png_path: Path) -> tuple[bytes, np.ndarray]:
    from PIL import Image

    with Image.open(png_path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return np.ascontiguousarray(arr).tobytes(), arr


def build_cache_from_bundle(
    bundle_dir: str | Path,
    index_path: str | Path,
    bank_paths: list[str | Path],
    out_path: str | Path,
) -> dict:
    """Embed every preprocessed image in the index plus every bank prompt
    through the bundle's graphs, and write a cache the main toolkit can read.

    Recomputed image keys are cross-checked against the keys the preprocess
    step recorded; a mismatch means the two sides' key derivation drifted.
    """
    import torch
    from transformers import CLIPTokenizer

    from .bundle import verify_bundle

    bundle = Path(bundle_dir)
    meta = verify_bundle(bundle)
    dim = int(meta["dim"])
    input_size = int(meta["input_size"])
    context_length = int(meta["context_length"])
    image_graph = torch.jit.load(str(bundle / "image_encoder.pt"))
    text_graph = torch.jit.load(str(bundle / "text_encoder.pt"))
    tokenizer = CLIPTokenizer.from_pretrained(str(bundle / "tokenizer"))

    index = read_index(index_path)
    entries: dict[bytes, np.ndarray] = {}
    for item in index.images:
        png_path = index.base_dir / item["path"]
        rgb_bytes, arr = load_rgb_bytes(png_path)
        if arr.shape[:2] != (input_size, input_size):
            raise ValueError(
                f"{png_path}: image is {arr.shape[1]}x{arr.shape[0]}, bundle "
                f"expects {input_size}x{input_size}"
            )
        key = image_key(rgb_bytes, index.config_token)
        recorded = item.get("content_key")
        if recorded is not None and key.hex() != recorded:
            raise ValueError(
                f"{png_path}: key derivation mismatch (recomputed {key.hex()[:12]}, "
                f"index recorded {recorded[:12]})"
            )
        tensor = torch.from_numpy(arr.astype(np.float32) / 255.0)
        tensor = tensor.permute(2, 0, 1).unsqueeze(0)
        with torch.no_grad():
            vec = image_graph(tensor)[0].numpy().astype(np.float32)
        entries[key] = vec

    n_prompts = 0
    for bank_path in bank_paths:
        for prompt in read_bank_prompts(bank_path):
            ids = tokenizer(
                prompt, padding="max_length", truncation=True,
                max_length=context_length, return_tensors="pt",
            )["input_ids"]
            with torch.no_grad():
                vec = text_graph(ids)[0].numpy().astype(np.float32)
            entries[text_key(prompt)] = vec
            n_prompts += 1

    write_cache(out_path, entries, dim=dim, provider_id=str(meta["provider_id"]))
    return {
        "cache_path": str(out_path),
        "n_entries": len(entries),
        "n_images": len(index.images),
        "n_prompts": n_prompts,
        "dim": dim,
        "provider_id": str(meta["provider_id"]),
    }
