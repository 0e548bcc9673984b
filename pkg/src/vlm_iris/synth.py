"""Synthetic thermal scene generation for desk-scale runs.

Toy radiometric model: counts = round(temp_c * 100). A frame is an ambient
border around a centered bed region (1/8-per-side margins), optionally with
a rectangle or ellipse object inside the bed, plus seeded Gaussian noise.
Hot cells emulate a heated bed (~85 C) with cooler objects; room cells a
~34 C bed with warmer just-printed objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .dataset import (
    ClassLabel,
    Condition,
    DatasetManifest,
    SampleRecord,
    save_manifest,
)
from .errors import InputError
from .imageio import write_pgm16
from .images import ThermalImage

COUNTS_PER_DEGREE = 100.0
TEMP_RANGE_C = (0.0, 200.0)
BED_MARGIN_FRACTION = 0.125


@dataclass(frozen=True)
class ObjectSpec:
    shape: Literal["rectangle", "ellipse"]
    center: tuple[int, int]  # (x, y)
    size: tuple[int, int]  # (width, height)

    def __post_init__(self) -> None:
        if self.shape not in ("rectangle", "ellipse"):
            raise InputError(f"unknown object shape {self.shape!r}")
        if self.size[0] < 1 or self.size[1] < 1:
            raise InputError("object size must be at least 1x1")


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    bed_temp_c: float
    ambient_temp_c: float
    object_temp_c: float
    object: ObjectSpec | None
    noise_sigma: float
    seed: int

    def __post_init__(self) -> None:
        if self.width < 8 or self.height < 8:
            raise InputError("scene must be at least 8x8 pixels")
        lo, hi = TEMP_RANGE_C
        for name in ("bed_temp_c", "ambient_temp_c", "object_temp_c"):
            value = getattr(self, name)
            if not (lo <= value <= hi):
                raise InputError(f"{name} {value} outside plausible range [{lo}, {hi}] C")
        if self.noise_sigma < 0:
            raise InputError("noise_sigma must be non-negative")


def bed_bounds(width: int, height: int) -> tuple[int, int, int, int]:
    """(x0, y0, x1, y1) of the bed region, half-open."""
    mx = math.floor(width * BED_MARGIN_FRACTION)
    my = math.floor(height * BED_MARGIN_FRACTION)
    return mx, my, width - mx, height - my


def _object_mask(spec: ObjectSpec, width: int, height: int) -> np.ndarray:
    cx, cy = spec.center
    sw, sh = spec.size
    yy, xx = np.mgrid[0:height, 0:width]
    if spec.shape == "rectangle":
        x0, y0 = cx - sw // 2, cy - sh // 2
        return (xx >= x0) & (xx < x0 + sw) & (yy >= y0) & (yy < y0 + sh)
    rx, ry = sw / 2.0, sh / 2.0
    return ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 <= 1.0


def generate_scene(spec: SceneSpec) -> ThermalImage:
    counts = np.full(
        (spec.height, spec.width),
        math.floor(spec.ambient_temp_c * COUNTS_PER_DEGREE + 0.5),
        dtype=np.float64,
    )
    x0, y0, x1, y1 = bed_bounds(spec.width, spec.height)
    counts[y0:y1, x0:x1] = math.floor(spec.bed_temp_c * COUNTS_PER_DEGREE + 0.5)

    if spec.object is not None:
        mask = _object_mask(spec.object, spec.width, spec.height)
        ys, xs = np.nonzero(mask)
        if len(xs) == 0:
            raise InputError("object footprint is empty")
        if xs.min() < x0 or xs.max() >= x1 or ys.min() < y0 or ys.max() >= y1:
            raise InputError("object must lie fully inside the bed region")
        counts[mask] = math.floor(spec.object_temp_c * COUNTS_PER_DEGREE + 0.5)

    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        counts = np.floor(
            counts + rng.normal(0.0, spec.noise_sigma, counts.shape) + 0.5
        )
    pixels = np.clip(counts, 0, 65535).astype(np.uint16)
    return ThermalImage(pixels=pixels)


# Temperature regimes per condition: (bed_c, object_c range).
_CONDITION_TEMPS = {
    Condition.HOT: (85.0, (50.0, 60.0)),
    Condition.ROOM: (34.0, (45.0, 55.0)),
}
DEFAULT_AMBIENT_C = 22.0
DEFAULT_NOISE_SIGMA = 40.0


def _cell_scene(
    label: ClassLabel,
    condition: Condition,
    width: int,
    height: int,
    rng: np.random.Generator,
    seed: int,
    noise_sigma: float,
) -> SceneSpec:
    bed_c, (obj_lo, obj_hi) = _CONDITION_TEMPS[condition]
    bed_c = bed_c + float(rng.uniform(-2.0, 2.0))
    obj: ObjectSpec | None = None
    if label is ClassLabel.PRESENT:
        x0, y0, x1, y1 = bed_bounds(width, height)
        bw, bh = x1 - x0, y1 - y0
        sw = int(rng.integers(max(4, bw // 6), max(5, bw // 2)))
        sh = int(rng.integers(max(4, bh // 6), max(5, bh // 2)))
        cx = int(rng.integers(x0 + sw // 2 + 1, x1 - (sw - sw // 2) - 1))
        cy = int(rng.integers(y0 + sh // 2 + 1, y1 - (sh - sh // 2) - 1))
        shape = "rectangle" if rng.integers(0, 2) == 0 else "ellipse"
        obj = ObjectSpec(shape=shape, center=(cx, cy), size=(sw, sh))
    return SceneSpec(
        width=width,
        height=height,
        bed_temp_c=bed_c,
        ambient_temp_c=DEFAULT_AMBIENT_C,
        object_temp_c=float(rng.uniform(obj_lo, obj_hi)),
        object=obj,
        noise_sigma=noise_sigma,
        seed=seed,
    )


def generate_dataset(
    out_dir: str | Path,
    n_per_cell: int,
    seed: int,
    width: int = 160,
    height: int = 128,
    noise_sigma: float = DEFAULT_NOISE_SIGMA,
) -> tuple[DatasetManifest, Path]:
    """Write n_per_cell images per (label, condition) cell plus a manifest.

    Returns (manifest, manifest_path). Fully deterministic per seed.
    """
    if n_per_cell < 1:
        raise InputError("n_per_cell must be >= 1")
    out_dir = Path(out_dir)
    images_dir = out_dir / "images"
    try:
        images_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory {images_dir}: {exc}")

    records: list[SampleRecord] = []
    cells = [(lb, cond) for cond in Condition for lb in ClassLabel]
    for cell_idx, (label, condition) in enumerate(cells):
        for i in range(n_per_cell):
            seq = np.random.SeedSequence((seed, cell_idx, i))
            rng = np.random.default_rng(seq)
            scene_seed = int(seq.generate_state(1)[0])
            spec = _cell_scene(
                label, condition, width, height, rng, scene_seed, noise_sigma
            )
            image = generate_scene(spec)
            sample_id = f"{condition.value}_{label.value}_{i:03d}"
            rel_path = f"images/{sample_id}.pgm"
            write_pgm16(image, out_dir / rel_path)
            records.append(
                SampleRecord(
                    sample_id=sample_id,
                    image_path=rel_path,
                    label=label,
                    condition=condition,
                )
            )

    manifest = DatasetManifest(records=tuple(records), root_dir=out_dir)
    manifest_path = save_manifest(manifest, out_dir / "manifest.jsonl", root_dir=".")
    return manifest, manifest_path
