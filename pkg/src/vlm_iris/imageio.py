"""Thermal/RGB image file I/O.

Thermal input formats: binary PGM (P5, maxval 65535, big-endian samples per
the netpbm spec) and 16-bit grayscale PNG. RGB output: 8-bit PNG. The PGM
codec is hand-rolled so round-trips are bit-exact.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError
from .images import RgbImage, ThermalImage

PGM_MAXVAL = 65535


def write_pgm16(img: ThermalImage, path: str | Path) -> Path:
    path = Path(path)
    header = f"P5\n{img.width} {img.height}\n{PGM_MAXVAL}\n".encode("ascii")
    path.write_bytes(header + img.pixels.astype(">u2").tobytes())
    return path


def _read_pgm_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """Read `count` whitespace/comment-delimited integer tokens; returns
    (tokens, offset just past the single whitespace after the last one)."""
    tokens: list[int] = []
    i = 0
    while len(tokens) < count:
        if i >= len(data):
            raise DataError("pgm: truncated header")
        c = data[i : i + 1]
        if c == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
                j += 1
            tok = data[i:j]
            try:
                tokens.append(int(tok))
            except ValueError:
                raise DataError(f"pgm: bad header token {tok!r}")
            i = j
    if i >= len(data) or not data[i : i + 1].isspace():
        raise DataError("pgm: missing whitespace after maxval")
    return tokens, i + 1


def read_pgm16(path: str | Path) -> ThermalImage:
    path = Path(path)
    data = path.read_bytes()
    if not data.startswith(b"P5"):
        raise DataError(f"{path}: not a binary PGM (P5) file")
    (width, height, maxval), offset = _read_pgm_tokens(data[2:], 3)
    offset += 2
    if maxval != PGM_MAXVAL:
        raise DataError(f"{path}: expected 16-bit PGM (maxval {PGM_MAXVAL}), got {maxval}")
    expected = width * height * 2
    body = data[offset : offset + expected]
    if len(body) != expected:
        raise DataError(f"{path}: truncated pixel data ({len(body)} of {expected} bytes)")
    pixels = np.frombuffer(body, dtype=">u2").reshape(height, width).astype(np.uint16)
    return ThermalImage(pixels=pixels)


def read_thermal(path: str | Path) -> ThermalImage:
    """Read a thermal frame; format chosen by extension (.pgm or .png)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"image file not found: {path}")
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        return read_pgm16(path)
    if suffix == ".png":
        return read_png16(path)
    raise DataError(f"{path}: unsupported thermal format {suffix!r} (use .pgm or .png)")


def read_png16(path: str | Path) -> ThermalImage:
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.mode not in ("I", "I;16", "I;16B"):
                raise DataError(f"{path}: expected 16-bit grayscale PNG, got mode {im.mode}")
            arr = np.asarray(im, dtype=np.int64)
    except DataError:
        raise
    except Exception as exc:
        raise DataError(f"{path}: png read failure: {exc}")
    if arr.min() < 0 or arr.max() > PGM_MAXVAL:
        raise DataError(f"{path}: sample values outside 16-bit range")
    return ThermalImage(pixels=arr.astype(np.uint16))


def write_png_rgb(img: RgbImage, path: str | Path) -> Path:
    path = Path(path)
    Image.fromarray(img.pixels, mode="RGB").save(path, format="PNG")
    return path


def read_png_rgb(path: str | Path) -> RgbImage:
    path = Path(path)
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except Exception as exc:
        raise DataError(f"{path}: png read failure: {exc}")
    return RgbImage(pixels=arr)
