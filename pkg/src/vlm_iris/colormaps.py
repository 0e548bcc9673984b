"""256-entry colormap lookup tables.

magma and viridis ship as repo data files (256 lines of `r g b` integers,
SHA-256 checksummed); grayscale is computed. Lookup index for a normalized
value v is round-half-up(v * 255) with no interpolation.
"""

from __future__ import annotations

import enum
import hashlib
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import DataError
from .images import NormalizedImage, RgbImage

LUT_SIZE = 256


class ColormapMode(enum.Enum):
    GRAYSCALE = "grayscale"
    MAGMA = "magma"
    VIRIDIS = "viridis"

    def __str__(self) -> str:
        return self.value


def round_half_up_u8(values: np.ndarray) -> np.ndarray:
    """Quantize non-negative floats to uint8, ties away from zero."""
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5).astype(np.uint8)


def _lut_dir():
    return resources.files("vlm_iris").joinpath("data", "luts")


@lru_cache(maxsize=None)
def _checksums() -> dict[str, str]:
    try:
        text = _lut_dir().joinpath("CHECKSUMS").read_text(encoding="ascii")
    except FileNotFoundError:
        raise DataError("colormap checksum file missing")
    sums = {}
    for line in text.splitlines():
        if line.strip():
            digest, name = line.split()
            sums[name] = digest
    return sums


def _parse_lut_text(text: str, name: str) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise DataError(f"{name}: line {lineno}: expected 'r g b'")
        try:
            rows.append([int(p) for p in parts])
        except ValueError:
            raise DataError(f"{name}: line {lineno}: non-integer channel value")
    table = np.asarray(rows, dtype=np.int64)
    if table.shape != (LUT_SIZE, 3):
        raise DataError(f"{name}: expected {LUT_SIZE} entries, got {table.shape[0]}")
    if table.min() < 0 or table.max() > 255:
        raise DataError(f"{name}: channel values outside [0, 255]")
    return table.astype(np.uint8)


@lru_cache(maxsize=None)
def load_lut(mode: ColormapMode) -> np.ndarray:
    """256x3 uint8 table for the given mode; data files are checksum-verified."""
    if mode is ColormapMode.GRAYSCALE:
        ramp = np.arange(LUT_SIZE, dtype=np.uint8)
        return np.stack([ramp, ramp, ramp], axis=1)
    filename = f"{mode.value}.txt"
    try:
        text = _lut_dir().joinpath(filename).read_text(encoding="ascii")
    except FileNotFoundError:
        raise DataError(f"colormap data file missing: {filename}")
    expected = _checksums().get(filename)
    if expected is None:
        raise DataError(f"no checksum recorded for {filename}")
    actual = hashlib.sha256(text.encode("ascii")).hexdigest()
    if actual != expected:
        raise DataError(f"corrupt colormap data file {filename}: checksum mismatch")
    return _parse_lut_text(text, filename)


def lut_index(values: np.ndarray) -> np.ndarray:
    """Map normalized values in [0, 1] to LUT indices 0..255."""
    return np.floor(np.asarray(values, dtype=np.float64) * 255.0 + 0.5).astype(np.intp)


def apply_colormap(img: NormalizedImage, mode: ColormapMode) -> RgbImage:
    lut = load_lut(mode)
    idx = lut_index(img.values)
    return RgbImage(pixels=lut[idx])
