"""Embedding providers and the binary embedding cache.

A provider maps RGB images and prompt strings into one shared vector space.
Providers return raw (not necessarily unit-norm) float vectors; callers
normalize with l2_normalize. Three implementations:

  * StubProvider    - content-hash seeded pseudorandom vectors, for tests
                      and desk-scale runs without model weights.
  * CacheProvider   - serves precomputed vectors from a cache file by
                      content key.
  * GraphProvider   - runs exported TorchScript encoder graphs (torch and
                      transformers are imported lazily).

Cache file layout (all integers little-endian):

  magic "IRIS" | format_version u32 | dim u32 |
  provider_id: u32 length + utf-8 bytes | entry_count u64 |
  entries: key (32 raw bytes) x vector (dim x float32)
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .errors import DataError, InputError
from .images import RgbImage

NORM_EPSILON = 1e-12
CACHE_MAGIC = b"IRIS"
CACHE_FORMAT_VERSION = 1
KEY_BYTES = 32


def l2_normalize(vec: np.ndarray) -> np.ndarray:
    """Scale to unit L2 norm (float64). Sub-epsilon norms are an error."""
    v = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm <= NORM_EPSILON:
        raise InputError("degenerate embedding: norm is (near) zero")
    return v / norm


def image_content_key(rgb_bytes: bytes, config_token: str) -> bytes:
    """SHA-256 over the preprocess config token and the exact RGB bytes, so
    cache entries cannot silently mismatch the pixel pipeline."""
    h = hashlib.sha256()
    h.update(config_token.encode("utf-8"))
    h.update(b"\x00")
    h.update(rgb_bytes)
    return h.digest()


def text_content_key(text: str) -> bytes:
    return hashlib.sha256(text.encode("utf-8")).digest()


class EmbeddingProvider(Protocol):
    provider_id: str

    def embed_image(self, img: RgbImage) -> np.ndarray: ...

    def embed_text(self, text: str) -> np.ndarray: ...

    def dim(self) -> int: ...


class StubProvider:
    """Deterministic pseudorandom embeddings derived from input bytes + seed."""

    def __init__(self, seed: int, dim: int = 512):
        self._seed = int(seed)
        self._dim = int(dim)
        self.provider_id = f"stub-seed{self._seed}-dim{self._dim}"

    def _vector(self, domain: bytes, content: bytes) -> np.ndarray:
        digest = hashlib.sha256(
            struct.pack("<q", self._seed) + domain + content
        ).digest()
        rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest[:16], "little")))
        return rng.standard_normal(self._dim).astype(np.float32)

    def embed_image(self, img: RgbImage) -> np.ndarray:
        return self._vector(b"img:", img.tobytes())

    def embed_text(self, text: str) -> np.ndarray:
        return self._vector(b"txt:", text.encode("utf-8"))

    def dim(self) -> int:
        return self._dim


@dataclass(frozen=True)
class EmbeddingCache:
    dim: int
    provider_id: str
    format_version: int
    entries: dict[bytes, np.ndarray]


def cache_write(
    path: str | Path, entries: dict[bytes, np.ndarray], dim: int, provider_id: str
) -> Path:
    path = Path(path)
    for key, vec in entries.items():
        if len(key) != KEY_BYTES:
            raise InputError(f"cache key must be {KEY_BYTES} bytes, got {len(key)}")
        if vec.shape != (dim,):
            raise InputError(
                f"cache entry {key.hex()[:12]} has dim {vec.shape}, header says {dim}"
            )
    pid = provider_id.encode("utf-8")
    with path.open("wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<II", CACHE_FORMAT_VERSION, dim))
        fh.write(struct.pack("<I", len(pid)))
        fh.write(pid)
        fh.write(struct.pack("<Q", len(entries)))
        for key, vec in entries.items():
            fh.write(key)
            fh.write(np.asarray(vec, dtype="<f4").tobytes())
    return path


def cache_read(path: str | Path) -> EmbeddingCache:
    path = Path(path)
    if not path.exists():
        raise DataError(f"cache file not found: {path}")
    data = path.read_bytes()
    if data[:4] != CACHE_MAGIC:
        raise DataError(f"{path}: bad magic (not an embedding cache)")
    version, dim = struct.unpack_from("<II", data, 4)
    if version != CACHE_FORMAT_VERSION:
        raise DataError(f"{path}: unsupported cache format_version {version}")
    (pid_len,) = struct.unpack_from("<I", data, 12)
    offset = 16
    provider_id = data[offset : offset + pid_len].decode("utf-8")
    offset += pid_len
    (count,) = struct.unpack_from("<Q", data, offset)
    offset += 8
    entry_size = KEY_BYTES + dim * 4
    if len(data) - offset != count * entry_size:
        raise DataError(f"{path}: truncated cache ({len(data) - offset} payload bytes, "
                        f"expected {count * entry_size})")
    entries: dict[bytes, np.ndarray] = {}
    for _ in range(count):
        key = data[offset : offset + KEY_BYTES]
        offset += KEY_BYTES
        vec = np.frombuffer(data[offset : offset + dim * 4], dtype="<f4").copy()
        offset += dim * 4
        if key in entries:
            raise DataError(f"{path}: duplicate cache key {key.hex()[:12]}")
        entries[key] = vec
    return EmbeddingCache(
        dim=dim, provider_id=provider_id, format_version=version, entries=entries
    )


class CacheProvider:
    """Serves embeddings by content key from an EmbeddingCache.

    `config_token` must match the token used when the cache was built; it is
    folded into every image key, so a pipeline mismatch surfaces as a missing
    key instead of a silently wrong vector.
    """

    def __init__(self, cache: EmbeddingCache, config_token: str):
        self._cache = cache
        self._token = config_token
        self.provider_id = cache.provider_id

    def _lookup(self, key: bytes, described: str) -> np.ndarray:
        vec = self._cache.entries.get(key)
        if vec is None:
            raise DataError(f"cache miss for {described} (key {key.hex()})")
        return vec

    def embed_image(self, img: RgbImage) -> np.ndarray:
        key = image_content_key(img.tobytes(), self._token)
        return self._lookup(key, f"image of {img.width}x{img.height}")

    def embed_text(self, text: str) -> np.ndarray:
        return self._lookup(text_content_key(text), f"text {text!r}")

    def dim(self) -> int:
        return self._cache.dim


def check_cache_compatible(cache: EmbeddingCache, dim: int) -> None:
    if cache.dim != dim:
        raise DataError(f"cache dim {cache.dim} does not match provider dim {dim}")


class GraphProvider:
    """Runs exported TorchScript image/text encoder graphs.

    Expects a bundle directory with image_encoder.pt, text_encoder.pt,
    tokenizer/ assets, and metadata.json carrying dim, input_size,
    provider_id, context_length, and per-file sha256 checksums (all as
    written by the export tooling). Input standardization is baked into the
    exported graphs; this provider feeds raw RGB scaled to [0, 1].
    """

    def __init__(self, bundle_dir: str | Path):
        import json

        import torch
        from transformers import CLIPTokenizer

        bundle = Path(bundle_dir)
        meta_path = bundle / "metadata.json"
        if not meta_path.exists():
            raise DataError(f"bundle metadata not found: {meta_path}")
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        for name, expected in meta.get("checksums", {}).items():
            target = bundle / name
            if not target.exists():
                raise DataError(f"bundle file missing: {target}")
            actual = hashlib.sha256(target.read_bytes()).hexdigest()
            if actual != expected:
                raise DataError(f"bundle file {name}: checksum mismatch")

        self._torch = torch
        self._input_size = int(meta["input_size"])
        self._context_length = int(meta.get("context_length", 77))
        self._dim = int(meta["dim"])
        self.provider_id = str(meta["provider_id"])
        try:
            self._image_graph = torch.jit.load(str(bundle / "image_encoder.pt"), map_location="cpu")
            self._text_graph = torch.jit.load(str(bundle / "text_encoder.pt"), map_location="cpu")
        except Exception as exc:
            raise DataError(f"failed to load encoder graphs: {exc}")
        try:
            self._tokenizer = CLIPTokenizer.from_pretrained(str(bundle / "tokenizer"))
        except Exception as exc:
            raise DataError(f"failed to load tokenizer assets: {exc}")

        # Probe once so a dim mismatch fails at load, not mid-batch.
        with torch.no_grad():
            probe = self._image_graph(
                torch.zeros(1, 3, self._input_size, self._input_size)
            )
        if probe.shape != (1, self._dim):
            raise DataError(
                f"image graph output {tuple(probe.shape)} does not match "
                f"metadata dim {self._dim}"
            )

    def embed_image(self, img: RgbImage) -> np.ndarray:
        if img.width != self._input_size or img.height != self._input_size:
            raise DataError(
                f"image graph expects {self._input_size}x{self._input_size} input, "
                f"got {img.width}x{img.height}"
            )
        torch = self._torch
        arr = img.pixels.astype(np.float32) / 255.0
        tensor = torch.from_numpy(arr).permute(2, 0, 1).unsqueeze(0)
        with torch.no_grad():
            out = self._image_graph(tensor)
        return out[0].numpy().astype(np.float32)

    def embed_text(self, text: str) -> np.ndarray:
        torch = self._torch
        try:
            ids = self._tokenizer(
                text,
                padding="max_length",
                truncation=True,
                max_length=self._context_length,
                return_tensors="pt",
            )["input_ids"]
        except Exception as exc:
            raise DataError(f"tokenization failure for {text!r}: {exc}")
        with torch.no_grad():
            out = self._text_graph(ids)
        return out[0].numpy().astype(np.float32)

    def dim(self) -> int:
        return self._dim
