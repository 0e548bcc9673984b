from __future__ import annotations

import numpy as np
import pytest

from vlm_iris.embed import StubProvider
from vlm_iris.synth import generate_dataset


@pytest.fixture
def stub():
    return StubProvider(seed=0, dim=64)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """2 images per (label, condition) cell, 64x48 frames."""
    out = tmp_path_factory.mktemp("synthdata")
    manifest, manifest_path = generate_dataset(
        out, n_per_cell=2, seed=7, width=64, height=48, noise_sigma=30.0
    )
    return manifest, manifest_path, out


def make_rgb(shape=(4, 4), value=0, seed=None):
    from vlm_iris.images import RgbImage

    h, w = shape
    if seed is not None:
        rng = np.random.default_rng(seed)
        return RgbImage(pixels=rng.integers(0, 256, (h, w, 3), dtype=np.uint8))
    return RgbImage(pixels=np.full((h, w, 3), value, dtype=np.uint8))
