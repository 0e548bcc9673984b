from __future__ import annotations

import numpy as np
import pytest

from vlm_iris.colormaps import ColormapMode, apply_colormap
from vlm_iris.errors import InputError
from vlm_iris.images import NormalizedImage, RgbImage, ThermalImage
from vlm_iris.preprocess import (
    PreprocessConfig,
    center_zoom_crop,
    nearest_rank_percentile,
    normalize,
    preprocess_pipeline,
    resize,
)

from conftest import make_rgb


def thermal(array):
    return ThermalImage(pixels=np.asarray(array, dtype=np.uint16))


class TestNormalize:
    def test_extremes_map_to_bounds(self):
        out = normalize(thermal([[0, 65535]]))
        assert out.values.tolist() == [[0.0, 1.0]]

    def test_constant_image_maps_to_half(self):
        out = normalize(thermal(np.full((3, 3), 500)))
        assert np.all(out.values == 0.5)

    def test_linear_three_values(self):
        out = normalize(thermal([[100, 200, 300]]))
        assert out.values.tolist() == [[0.0, 0.5, 1.0]]

    def test_range_invariant_and_endpoints(self):
        rng = np.random.default_rng(3)
        img = thermal(rng.integers(0, 65536, (20, 30)))
        out = normalize(img)
        assert out.values.min() == 0.0 and out.values.max() == 1.0
        assert np.all((out.values >= 0) & (out.values <= 1))

    def test_percentile_clipping_clamps_tails(self):
        # 1..100; nearest-rank: 10th pct -> 10, 90th pct -> 90
        img = thermal(np.arange(1, 101).reshape(10, 10))
        out = normalize(img, 10, 90)
        assert out.values.flat[0] == 0.0  # below lo, clamped
        assert out.values.flat[99] == 1.0  # above hi, clamped
        expected_mid = (50 - 10) / 80
        assert out.values.flat[49] == pytest.approx(expected_mid)

    def test_nearest_rank_definition(self):
        values = np.array([10, 20, 30, 40])
        # rank = ceil(p/100 * 4), 1-indexed
        assert nearest_rank_percentile(values, 0) == 10
        assert nearest_rank_percentile(values, 25) == 10
        assert nearest_rank_percentile(values, 26) == 20
        assert nearest_rank_percentile(values, 100) == 40


class TestCenterZoomCrop:
    def test_spec_geometry_640x512(self):
        rng = np.random.default_rng(0)
        img = RgbImage(pixels=rng.integers(0, 256, (512, 640, 3), dtype=np.uint8))
        out = center_zoom_crop(img, 0.5)
        assert (out.height, out.width) == (256, 256)
        assert np.array_equal(out.pixels, img.pixels[128:384, 192:448])

    def test_identity_on_square_fraction_one(self):
        img = make_rgb((7, 7), seed=1)
        out = center_zoom_crop(img, 1.0)
        assert np.array_equal(out.pixels, img.pixels)

    def test_small_image_floor_rules(self):
        img = make_rgb((5, 5), seed=2)
        out = center_zoom_crop(img, 0.5)
        assert (out.height, out.width) == (2, 2)
        assert np.array_equal(out.pixels, img.pixels[1:3, 1:3])

    def test_degenerate_crop_is_error(self):
        img = make_rgb((3, 3), seed=3)
        with pytest.raises(InputError, match="crop degenerate"):
            center_zoom_crop(img, 0.1)

    def test_verbatim_subarray(self):
        img = make_rgb((10, 16), seed=4)
        out = center_zoom_crop(img, 0.7)
        side = out.width
        y0 = (10 - side) // 2
        x0 = (16 - side) // 2
        assert np.array_equal(out.pixels, img.pixels[y0 : y0 + side, x0 : x0 + side])


def reference_bilinear(pixels: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Scalar-loop oracle for the resize contract."""
    src_h, src_w, _ = pixels.shape
    out = np.zeros((out_h, out_w, 3), dtype=np.uint8)
    for y in range(out_h):
        sy = (y + 0.5) * (src_h / out_h) - 0.5
        y0 = int(np.floor(sy))
        fy = sy - y0
        y0c, y1c = min(max(y0, 0), src_h - 1), min(max(y0 + 1, 0), src_h - 1)
        for x in range(out_w):
            sx = (x + 0.5) * (src_w / out_w) - 0.5
            x0 = int(np.floor(sx))
            fx = sx - x0
            x0c, x1c = min(max(x0, 0), src_w - 1), min(max(x0 + 1, 0), src_w - 1)
            for c in range(3):
                top = pixels[y0c, x0c, c] * (1 - fx) + pixels[y0c, x1c, c] * fx
                bot = pixels[y1c, x0c, c] * (1 - fx) + pixels[y1c, x1c, c] * fx
                out[y, x, c] = int(np.floor(top * (1 - fy) + bot * fy + 0.5))
    return out


class TestResize:
    def test_identity_is_bit_exact(self):
        img = make_rgb((13, 9), seed=5)
        out = resize(img, 9, 13)
        assert np.array_equal(out.pixels, img.pixels)

    def test_constant_stays_constant(self):
        img = make_rgb((448, 448), value=77)
        out = resize(img, 224, 224)
        assert np.all(out.pixels == 77)

    def test_2x1_to_4x1_expected_values(self):
        img = RgbImage(
            pixels=np.array([[[0, 0, 0], [255, 255, 255]]], dtype=np.uint8)
        )
        out = resize(img, 4, 1)
        grays = out.pixels[0, :, 0].tolist()
        # oracle: reference interpolation gives 0, 64, 191, 255
        assert grays == [0, 64, 191, 255]
        assert grays == sorted(grays)
        assert np.array_equal(out.pixels, reference_bilinear(img.pixels, 4, 1))

    @pytest.mark.parametrize("shape,target", [((6, 8), (5, 3)), ((5, 5), (11, 7)), ((3, 7), (7, 3))])
    def test_matches_reference_oracle(self, shape, target):
        img = make_rgb(shape, seed=hash(shape) % 1000)
        out_w, out_h = target
        out = resize(img, out_w, out_h)
        assert np.array_equal(out.pixels, reference_bilinear(img.pixels, out_w, out_h))


class TestPipeline:
    def test_default_output_is_224(self):
        rng = np.random.default_rng(11)
        img = thermal(rng.integers(0, 65536, (512, 640)))
        out = preprocess_pipeline(img, PreprocessConfig())
        assert (out.height, out.width) == (224, 224)

    def test_constant_frame_grayscale_mid_gray(self):
        img = thermal(np.full((64, 64), 1234))
        out = preprocess_pipeline(img, PreprocessConfig(output_size=16))
        assert np.all(out.pixels == 128)

    def test_crop_fraction_one_square_is_resize_only(self):
        rng = np.random.default_rng(12)
        img = thermal(rng.integers(0, 65536, (32, 32)))
        cfg = PreprocessConfig(crop_fraction=1.0, output_size=16)
        via_pipeline = preprocess_pipeline(img, cfg)
        direct = resize(apply_colormap(normalize(img), ColormapMode.GRAYSCALE), 16, 16)
        assert np.array_equal(via_pipeline.pixels, direct.pixels)

    def test_bit_identical_repeat(self):
        rng = np.random.default_rng(13)
        img = thermal(rng.integers(0, 65536, (48, 64)))
        cfg = PreprocessConfig(colormap=ColormapMode.MAGMA, output_size=32)
        a = preprocess_pipeline(img, cfg)
        b = preprocess_pipeline(img, cfg)
        assert a.pixels.tobytes() == b.pixels.tobytes()

    @pytest.mark.parametrize("mode", list(ColormapMode))
    def test_colormap_commutes_with_crop(self, mode):
        rng = np.random.default_rng(14)
        values = rng.random((20, 26))
        norm = NormalizedImage(values=values)
        color_then_crop = center_zoom_crop(apply_colormap(norm, mode), 0.5)
        crop_side = color_then_crop.width
        y0 = (20 - crop_side) // 2
        x0 = (26 - crop_side) // 2
        cropped_norm = NormalizedImage(
            values=values[y0 : y0 + crop_side, x0 : x0 + crop_side]
        )
        crop_then_color = apply_colormap(cropped_norm, mode)
        assert np.array_equal(color_then_crop.pixels, crop_then_color.pixels)


class TestConfig:
    def test_invalid_clips_rejected(self):
        with pytest.raises(InputError):
            PreprocessConfig(clip_lo_pct=50, clip_hi_pct=50)

    def test_invalid_fraction_rejected(self):
        with pytest.raises(InputError):
            PreprocessConfig(crop_fraction=0.0)

    def test_token_is_stable(self):
        assert PreprocessConfig().token() == PreprocessConfig().token()
        assert PreprocessConfig().token() != PreprocessConfig(output_size=64).token()
