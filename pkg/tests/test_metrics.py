"""PSNR, SSIM, perceptual distance, embedders, FID and KID."""

import math

import numpy as np
import pytest

from guidedicm.evaluator import embedders, metrics
from guidedicm.evaluator.metrics import GaussianFit


@pytest.fixture(scope='module')
def embedder():
    return embedders.init_embedder()


class TestPsnr:
    def test_identical_is_capped(self, smooth_image):
        assert metrics.psnr(smooth_image, smooth_image) == 99.0

    def test_hundredth_mse(self):
        assert metrics.psnr(np.zeros((8, 8, 3)), np.full((8, 8, 3), 0.1)) == pytest.approx(
            20.0
        )

    def test_unit_mse(self):
        assert metrics.psnr(np.zeros((8, 8, 3)), np.ones((8, 8, 3))) == 0.0

    def test_decreases_with_noise_amplitude(self, rng):
        image = np.full((16, 16, 3), 0.5)
        noise = rng.standard_normal(image.shape)
        values = [
            metrics.psnr(image, np.clip(image + amplitude * noise, 0, 1))
            for amplitude in (0.01, 0.05, 0.1)
        ]
        assert values[0] > values[1] > values[2]

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            metrics.psnr(np.zeros((8, 8, 3)), np.zeros((8, 9, 3)))


class TestSsim:
    def test_identical(self, smooth_image):
        assert metrics.ssim(smooth_image, smooth_image) == pytest.approx(1.0, abs=1e-12)

    def test_equal_constants(self):
        image = np.full((16, 16, 3), 0.5)
        assert metrics.ssim(image, image.copy()) == pytest.approx(1.0, abs=1e-12)

    def test_black_against_white(self):
        c1 = 0.01**2
        value = metrics.ssim(np.zeros((16, 16, 3)), np.ones((16, 16, 3)))
        assert value == pytest.approx(c1 / (1.0 + c1), rel=1e-6)

    def test_noise_lowers_ssim(self, smooth_image, rng):
        noisy = np.clip(smooth_image + rng.normal(0, 0.1, smooth_image.shape), 0, 1)
        assert metrics.ssim(smooth_image, noisy) < 0.9

    def test_symmetric(self, smooth_image, rng):
        noisy = np.clip(smooth_image + rng.normal(0, 0.1, smooth_image.shape), 0, 1)
        assert metrics.ssim(smooth_image, noisy) == pytest.approx(
            metrics.ssim(noisy, smooth_image), abs=1e-9
        )

    def test_too_small(self):
        with pytest.raises(ValueError):
            metrics.ssim(np.zeros((10, 16, 3)), np.zeros((10, 16, 3)))


class TestPerceptualDistance:
    def test_identical_is_zero(self, smooth_image, embedder):
        assert metrics.perceptual_distance(smooth_image, smooth_image, embedder) == 0.0

    def test_symmetric(self, smooth_image, rng, embedder):
        other = rng.uniform(size=smooth_image.shape)
        forward = metrics.perceptual_distance(smooth_image, other, embedder)
        backward = metrics.perceptual_distance(other, smooth_image, embedder)
        assert forward > 0.0
        assert forward == pytest.approx(backward, abs=1e-7)


class TestLaplacianEnergy:
    def test_constant_is_zero(self):
        assert metrics.laplacian_energy(np.full((16, 16, 3), 0.4)) == 0.0

    def test_texture_raises_energy(self, smooth_image, rng):
        noisy = np.clip(smooth_image + rng.normal(0.0, 0.05, smooth_image.shape), 0, 1)
        assert metrics.laplacian_energy(noisy) > metrics.laplacian_energy(smooth_image)


class TestEmbedder:
    def test_dimension(self, embedder):
        assert embedder.dim == 256

    def test_permutation_permutes_rows(self, rng, embedder):
        images = list(rng.uniform(size=(4, 32, 32, 3)))
        order = [2, 0, 3, 1]
        rows = embedders.embed(images, embedder)
        permuted = embedders.embed([images[i] for i in order], embedder)
        np.testing.assert_allclose(permuted, rows[order], rtol=1e-6)

    def test_deterministic(self, rng, embedder):
        images = list(rng.uniform(size=(3, 32, 32, 3)))
        first = embedders.embed(images, embedder)
        second = embedders.embed(images, embedders.init_embedder())
        assert first.shape == (3, 256)
        np.testing.assert_array_equal(first, second)

    def test_mixed_sizes_keep_order(self, rng, embedder):
        small = rng.uniform(size=(16, 16, 3))
        large = rng.uniform(size=(32, 24, 3))
        together = embedders.embed([small, large, small], embedder, batch_size=2)
        np.testing.assert_allclose(together[0], together[2])
        np.testing.assert_allclose(
            together[1], embedders.embed([large], embedder)[0], rtol=1e-6
        )

    def test_empty(self, embedder):
        with pytest.raises(ValueError):
            embedders.embed([], embedder)

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            embedders.init_embedder('inception')


class TestGaussianFit:
    def test_identical_rows(self):
        fit = metrics.fit_gaussian(np.ones((5, 3)))
        np.testing.assert_array_equal(fit.cov, np.zeros((3, 3)))

    def test_two_rows(self):
        fit = metrics.fit_gaussian(np.array([[0.0, 0.0], [2.0, 0.0]]))
        np.testing.assert_allclose(fit.mean, [1.0, 0.0])
        np.testing.assert_allclose(fit.cov, [[2.0, 0.0], [0.0, 0.0]])

    def test_single_row(self):
        with pytest.raises(ValueError):
            metrics.fit_gaussian(np.ones((1, 3)))


class TestFid:
    def test_identical_fits(self, rng):
        fit = metrics.fit_gaussian(rng.standard_normal((50, 8)))
        assert metrics.fid(fit, fit) == pytest.approx(0.0, abs=1e-6)

    def test_mean_offset(self):
        first = GaussianFit(np.zeros(8), np.eye(8))
        second = GaussianFit(np.r_[2.0, np.zeros(7)], np.eye(8))
        assert metrics.fid(first, second) == pytest.approx(4.0, abs=1e-6)

    def test_scaled_covariance(self):
        first = GaussianFit(np.zeros(8), np.eye(8))
        second = GaussianFit(np.zeros(8), 4.0 * np.eye(8))
        assert metrics.fid(first, second) == pytest.approx(8.0, abs=1e-6)

    def test_rotation_invariant(self, rng):
        x = rng.standard_normal((200, 6))
        y = rng.standard_normal((200, 6)) * 1.5 + 0.3
        rotation, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        plain = metrics.fid(metrics.fit_gaussian(x), metrics.fit_gaussian(y))
        rotated = metrics.fid(
            metrics.fit_gaussian(x @ rotation), metrics.fit_gaussian(y @ rotation)
        )
        assert rotated == pytest.approx(plain, abs=1e-5)

    @pytest.mark.slow
    def test_empirical_fits(self):
        rng = np.random.default_rng(3)
        shift = np.r_[2.0, np.zeros(7)]
        x = rng.standard_normal((5000, 8))
        y = rng.standard_normal((5000, 8)) + shift
        value = metrics.fid(metrics.fit_gaussian(x), metrics.fit_gaussian(y))
        assert value == pytest.approx(4.0, rel=0.1)

    def test_invalid_covariance(self):
        bad = GaussianFit(np.zeros(2), np.diag([1.0, -1.0]))
        with pytest.raises(ValueError):
            metrics.fid(bad, GaussianFit(np.zeros(2), np.eye(2)))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            metrics.fid(
                GaussianFit(np.zeros(2), np.eye(2)), GaussianFit(np.zeros(3), np.eye(3))
            )


class TestKid:
    def test_kernel_of_unit_vector(self):
        x = np.ones((1, 16))
        assert metrics.polynomial_kernel(x, x)[0, 0] == pytest.approx(8.0)

    def test_blocking(self):
        assert metrics.kid_blocking(2000, 2500) == (100, 20)
        assert metrics.kid_blocking(50, 80) == (50, 1)

    def test_symmetric(self, rng):
        x = rng.standard_normal((300, 8))
        y = rng.standard_normal((300, 8)) + 0.5
        assert metrics.kid(x, y).mean == pytest.approx(metrics.kid(y, x).mean, abs=1e-9)

    @pytest.mark.slow
    def test_same_distribution_is_unbiased(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((2000, 16))
        y = rng.standard_normal((2000, 16))
        estimate = metrics.kid(x, y)
        assert abs(estimate.mean) <= 3 * estimate.std_err

    def test_shifted_distribution_is_positive(self, rng):
        x = rng.standard_normal((400, 16))
        y = rng.standard_normal((400, 16)) + 1.0
        estimate = metrics.kid(x, y)
        assert estimate.mean > 3 * estimate.std_err

    def test_single_block_has_no_error_bar(self, rng):
        estimate = metrics.kid(rng.standard_normal((50, 4)), rng.standard_normal((50, 4)))
        assert math.isnan(estimate.std_err)

    def test_too_few_rows(self, rng):
        with pytest.raises(ValueError):
            metrics.kid(rng.standard_normal((1, 4)), rng.standard_normal((5, 4)))
