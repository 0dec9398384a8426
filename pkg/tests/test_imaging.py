"""Color transforms, bilinear resampling and PNG I/O."""

import numpy as np
import pytest

from guidedicm.commons import imaging
from guidedicm.commons.exceptions import ImageFileError


class TestRgbToYcc:
    def test_white(self):
        ycc = imaging.rgb_to_ycc(np.ones((1, 1, 3)))
        assert ycc.y[0, 0] == pytest.approx(1.0, abs=1e-12)
        assert ycc.cb[0, 0] == pytest.approx(0.0, abs=1e-12)
        assert ycc.cr[0, 0] == pytest.approx(0.0, abs=1e-12)

    def test_black(self):
        ycc = imaging.rgb_to_ycc(np.zeros((1, 1, 3)))
        assert (ycc.y[0, 0], ycc.cb[0, 0], ycc.cr[0, 0]) == (0.0, 0.0, 0.0)

    def test_red(self):
        ycc = imaging.rgb_to_ycc(np.array([[[1.0, 0.0, 0.0]]]))
        assert ycc.y[0, 0] == pytest.approx(0.299, abs=1e-9)
        assert ycc.cb[0, 0] == pytest.approx(-0.168636, abs=1e-9)
        assert ycc.cr[0, 0] == pytest.approx(0.499813, abs=1e-9)


class TestYccToRgb:
    def test_white(self):
        ycc = imaging.YccImage(np.ones((1, 1)), np.zeros((1, 1)), np.zeros((1, 1)))
        np.testing.assert_allclose(imaging.ycc_to_rgb(ycc), np.ones((1, 1, 3)))

    def test_red(self):
        ycc = imaging.YccImage(
            np.full((1, 1), 0.299),
            np.full((1, 1), -0.168636),
            np.full((1, 1), 0.499813),
        )
        np.testing.assert_allclose(
            imaging.ycc_to_rgb(ycc), [[[1.0, 0.0, 0.0]]], atol=1e-6
        )

    def test_inverts_forward_transform(self, rng):
        image = rng.uniform(size=(16, 16, 3))
        restored = imaging.ycc_to_rgb(imaging.rgb_to_ycc(image))
        np.testing.assert_allclose(restored, image, atol=1e-6)

    def test_rejects_mismatched_planes(self):
        ycc = imaging.YccImage(np.ones((2, 2)), np.zeros((2, 3)), np.zeros((2, 2)))
        with pytest.raises(ValueError):
            imaging.ycc_to_rgb(ycc)


class TestResizeBilinear:
    def test_constant_stays_constant(self):
        image = np.full((5, 7, 3), 0.42)
        np.testing.assert_allclose(imaging.resize_bilinear(image, 13, 3), 0.42)

    def test_identity_size(self, rng):
        image = rng.uniform(size=(9, 11, 3))
        np.testing.assert_array_equal(imaging.resize_bilinear(image, 9, 11), image)

    def test_upsampled_step_interpolates_columns(self):
        image = np.zeros((2, 2, 3))
        image[:, 1] = 1.0
        resized = imaging.resize_bilinear(image, 2, 4)
        for row in range(2):
            np.testing.assert_allclose(
                resized[row, :, 0], [0.0, 0.25, 0.75, 1.0], atol=1e-12
            )

    def test_rejects_empty_target(self):
        with pytest.raises(ValueError):
            imaging.resize_bilinear(np.zeros((4, 4, 3)), 0, 4)


class TestImageFiles:
    def test_save_then_load_within_quantization(self, tmp_path, rng):
        image = rng.uniform(size=(16, 12, 3))
        path = str(tmp_path / 'image.png')
        imaging.save_image(image, path)
        loaded = imaging.load_image(path)
        assert loaded.shape == image.shape
        assert np.max(np.abs(loaded - image)) <= 1.0 / 255

    def test_black_file_loads_as_zeros(self, tmp_path):
        path = str(tmp_path / 'black.png')
        imaging.save_image(np.zeros((8, 8, 3)), path)
        np.testing.assert_array_equal(imaging.load_image(path), np.zeros((8, 8, 3)))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            imaging.load_image(str(tmp_path / 'nope.png'))

    def test_not_an_image(self, tmp_path):
        path = tmp_path / 'fake.png'
        path.write_text('definitely not a PNG')
        with pytest.raises(ImageFileError):
            imaging.load_image(str(path))

    def test_check_rgb_rejects_gray(self):
        with pytest.raises(ValueError):
            imaging.check_rgb(np.zeros((8, 8)))

    def test_check_rgb_rejects_nan(self):
        image = np.zeros((8, 8, 3))
        image[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            imaging.check_rgb(image)
