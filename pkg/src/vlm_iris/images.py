"""Image value types. All pixel data is numpy-backed and treated as immutable."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class ThermalImage:
    """Single-channel 16-bit intensity frame, shape (height, width), uint16."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        p = self.pixels
        if p.ndim != 2 or p.dtype != np.uint16:
            raise InputError(f"thermal image must be 2-D uint16, got {p.dtype} {p.shape}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise InputError("thermal image must be at least 1x1")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class NormalizedImage:
    """Real-valued frame with every value in [0, 1], shape (height, width)."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = self.values
        if v.ndim != 2 or not np.issubdtype(v.dtype, np.floating):
            raise InputError(f"normalized image must be 2-D float, got {v.dtype} {v.shape}")
        if v.size and (float(v.min()) < 0.0 or float(v.max()) > 1.0):
            raise InputError("normalized values must lie in [0, 1]")

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class RgbImage:
    """8-bit RGB frame, shape (height, width, 3), uint8."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.dtype != np.uint8:
            raise InputError(f"rgb image must be (h, w, 3) uint8, got {p.dtype} {p.shape}")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def tobytes(self) -> bytes:
        """Row-major interleaved RGB bytes (the content-hash input)."""
        return np.ascontiguousarray(self.pixels).tobytes()
