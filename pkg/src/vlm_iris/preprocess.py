"""Thermal-to-RGB modality adaptation.

Fixed stage order: percentile normalize -> colormap -> center zoom crop ->
bilinear resize. Every stage is pure and deterministic; repeated runs on the
same input and config produce bit-identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .colormaps import ColormapMode, apply_colormap, round_half_up_u8
from .errors import InputError
from .images import NormalizedImage, RgbImage, ThermalImage

DEFAULT_CROP_FRACTION = 0.50
DEFAULT_OUTPUT_SIZE = 224


@dataclass(frozen=True)
class PreprocessConfig:
    colormap: ColormapMode = ColormapMode.GRAYSCALE
    crop_fraction: float = DEFAULT_CROP_FRACTION
    output_size: int = DEFAULT_OUTPUT_SIZE
    clip_lo_pct: float = 0.0
    clip_hi_pct: float = 100.0

    def __post_init__(self) -> None:
        if not (0.0 < self.crop_fraction <= 1.0):
            raise InputError(f"crop_fraction must be in (0, 1], got {self.crop_fraction}")
        if self.output_size < 1:
            raise InputError(f"output_size must be >= 1, got {self.output_size}")
        if not (0.0 <= self.clip_lo_pct < self.clip_hi_pct <= 100.0):
            raise InputError(
                f"clip percentiles must satisfy 0 <= lo < hi <= 100, "
                f"got ({self.clip_lo_pct}, {self.clip_hi_pct})"
            )

    def token(self) -> str:
        """Canonical serialization used in content keys and run echoes."""
        return (
            f"colormap={self.colormap.value};crop_fraction={self.crop_fraction!r};"
            f"output_size={self.output_size};clip_lo_pct={self.clip_lo_pct!r};"
            f"clip_hi_pct={self.clip_hi_pct!r}"
        )


def nearest_rank_percentile(values: np.ndarray, pct: float) -> float:
    """Nearest-rank percentile: value at 1-indexed rank ceil(pct/100 * n)."""
    flat = np.sort(np.asarray(values).ravel())
    n = flat.size
    rank = max(1, math.ceil(pct / 100.0 * n))
    return float(flat[rank - 1])


def normalize(
    img: ThermalImage, clip_lo_pct: float = 0.0, clip_hi_pct: float = 100.0
) -> NormalizedImage:
    """Percentile-clipped min-max normalization to [0, 1].

    A degenerate window (hi == lo, e.g. a constant image) maps everything
    to 0.5.
    """
    pixels = img.pixels.astype(np.float64)
    lo = nearest_rank_percentile(pixels, clip_lo_pct)
    hi = nearest_rank_percentile(pixels, clip_hi_pct)
    if hi == lo:
        values = np.full(pixels.shape, 0.5, dtype=np.float64)
    else:
        values = np.clip((pixels - lo) / (hi - lo), 0.0, 1.0)
    return NormalizedImage(values=values)


def center_zoom_crop(img: RgbImage, fraction: float) -> RgbImage:
    """Centered square crop of side floor(fraction * min(width, height)).

    The result is a verbatim sub-array of the input; no resampling.
    """
    if not (0.0 < fraction <= 1.0):
        raise InputError(f"crop fraction must be in (0, 1], got {fraction}")
    side = math.floor(fraction * min(img.width, img.height))
    if side < 1:
        raise InputError("crop degenerate: computed side < 1 pixel")
    x0 = (img.width - side) // 2
    y0 = (img.height - side) // 2
    return RgbImage(pixels=img.pixels[y0 : y0 + side, x0 : x0 + side].copy())


def _axis_weights(src: int, dst: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gather indices and fractional weights for one axis of a bilinear
    resize with half-pixel-centered sampling, edge-clamped."""
    scale = src / dst
    coords = (np.arange(dst, dtype=np.float64) + 0.5) * scale - 0.5
    lo = np.floor(coords).astype(np.intp)
    frac = coords - lo
    i0 = np.clip(lo, 0, src - 1)
    i1 = np.clip(lo + 1, 0, src - 1)
    return i0, i1, frac


def resize(img: RgbImage, out_w: int, out_h: int) -> RgbImage:
    """Bilinear resize; source coordinate = (dst + 0.5) * scale - 0.5,
    channels rounded half-up to 8 bits."""
    if out_w < 1 or out_h < 1:
        raise InputError(f"resize target must be >= 1x1, got {out_w}x{out_h}")
    x0, x1, fx = _axis_weights(img.width, out_w)
    y0, y1, fy = _axis_weights(img.height, out_h)
    src = img.pixels.astype(np.float64)
    wx = fx[None, :, None]
    rows0, rows1 = src[y0], src[y1]
    top = rows0[:, x0] * (1.0 - wx) + rows0[:, x1] * wx
    bot = rows1[:, x0] * (1.0 - wx) + rows1[:, x1] * wx
    out = top * (1.0 - fy)[:, None, None] + bot * fy[:, None, None]
    return RgbImage(pixels=round_half_up_u8(out))


def preprocess_pipeline(img: ThermalImage, cfg: PreprocessConfig) -> RgbImage:
    """normalize -> colormap -> center zoom crop -> resize."""
    norm = normalize(img, cfg.clip_lo_pct, cfg.clip_hi_pct)
    rgb = apply_colormap(norm, cfg.colormap)
    cropped = center_zoom_crop(rgb, cfg.crop_fraction)
    return resize(cropped, cfg.output_size, cfg.output_size)
