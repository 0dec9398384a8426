"""Noise schedule, forward process, loss and samplers."""

import numpy as np
import pytest
import tensorflow as tf

from guidedicm.commons.exceptions import NonFiniteError
from guidedicm.generator import diffusion
from guidedicm.generator.diffusion import NoiseSchedule


def zero_denoiser(z_t, t):
    return np.zeros_like(z_t)


class TestSchedule:
    def test_single_step(self):
        schedule = diffusion.make_schedule(1, 0.5, 0.5)
        np.testing.assert_allclose(schedule.betas, [0.5])
        np.testing.assert_allclose(schedule.alphas_cumprod, [0.5])

    def test_defaults(self):
        schedule = diffusion.make_schedule()
        assert schedule.steps == 1000
        assert schedule.alpha_bar(1) == pytest.approx(0.9999)
        assert schedule.alpha_bar(0) == 1.0
        assert np.all(np.diff(schedule.alphas_cumprod) < 0)

    @pytest.mark.parametrize(
        'steps, start, end', [(0, 1e-4, 0.02), (10, 0.0, 0.02), (10, 0.1, 0.01)]
    )
    def test_rejects_bad_schedules(self, steps, start, end):
        with pytest.raises(ValueError):
            diffusion.make_schedule(steps, start, end)


class TestForwardNoise:
    def test_zero_noise_scales(self, rng):
        schedule = diffusion.make_schedule()
        z0 = rng.standard_normal((2, 4, 4, 3))
        z_t = diffusion.forward_noise(z0, [10, 500], np.zeros_like(z0), schedule)
        for index, t in enumerate([10, 500]):
            np.testing.assert_allclose(
                z_t[index], np.sqrt(schedule.alpha_bar(t)) * z0[index]
            )

    def test_identity_schedule(self, rng):
        schedule = NoiseSchedule(np.array([0.0]), np.array([1.0]))
        z0 = rng.standard_normal((4, 4, 3))
        eps = rng.standard_normal((4, 4, 3))
        np.testing.assert_allclose(diffusion.forward_noise(z0, 1, eps, schedule), z0)

    def test_variance_matches_schedule(self, rng):
        schedule = diffusion.make_schedule()
        t = 300
        n = 100_000
        eps = rng.standard_normal(n)
        z_t = diffusion.forward_noise(np.zeros(n), np.full(n, t), eps, schedule)
        expected = 1.0 - schedule.alpha_bar(t)
        std_err = expected * np.sqrt(2.0 / (n - 1))
        assert abs(np.var(z_t, ddof=1) - expected) <= 3 * std_err

    def test_rejects_out_of_range_step(self):
        schedule = diffusion.make_schedule(10, 1e-4, 0.02)
        with pytest.raises(ValueError):
            diffusion.forward_noise(np.zeros(3), 0, np.zeros(3), schedule)
        with pytest.raises(ValueError):
            diffusion.forward_noise(np.zeros(3), 11, np.zeros(3), schedule)

    def test_rejects_shape_mismatch(self):
        schedule = diffusion.make_schedule(10, 1e-4, 0.02)
        with pytest.raises(ValueError):
            diffusion.forward_noise(np.zeros(3), 1, np.zeros(4), schedule)


class TestLoss:
    def test_oracle_has_zero_loss(self, rng):
        schedule = diffusion.make_schedule()
        z0 = rng.uniform(-1, 1, (8, 4, 4, 3))
        t = rng.integers(1, 1001, 8)
        eps = rng.standard_normal(z0.shape)
        loss = diffusion.loss_for_draws(lambda z_t, steps: eps, z0, t, eps, schedule)
        assert float(loss) == 0.0

    def test_zero_prediction_has_unit_loss(self, rng):
        schedule = diffusion.make_schedule()
        z0 = rng.uniform(-1, 1, (64, 8, 8, 3))
        loss = diffusion.training_loss(
            lambda z_t, steps: np.zeros_like(z_t), z0, schedule, rng
        )
        std_err = np.sqrt(2.0 / z0.size)
        assert abs(float(loss) - 1.0) <= 3 * std_err

    def test_batch_order_does_not_matter(self, rng):
        schedule = diffusion.make_schedule()
        z0 = rng.uniform(-1, 1, (6, 4, 4, 3))
        t = rng.integers(1, 1001, 6)
        eps = rng.standard_normal(z0.shape)
        order = rng.permutation(6)

        def predict(z_t, steps):
            return 0.3 * z_t

        loss = diffusion.loss_for_draws(predict, z0, t, eps, schedule)
        shuffled = diffusion.loss_for_draws(
            predict, z0[order], t[order], eps[order], schedule
        )
        assert float(shuffled) == pytest.approx(float(loss), abs=1e-12)

    def test_empty_batch(self, rng):
        schedule = diffusion.make_schedule()
        with pytest.raises(ValueError):
            diffusion.training_loss(zero_denoiser, np.zeros((0, 4, 4, 3)), schedule, rng)

    def test_squared_error(self):
        eps = np.array([[1.0, -1.0], [0.5, 0.0]])
        eps_hat = np.array([[0.0, -1.0], [0.5, 2.0]])
        assert float(diffusion.noise_prediction_error(eps, eps_hat)) == pytest.approx(1.25)

    def test_squared_error_follows_prediction_dtype(self):
        eps = np.ones((2, 3))
        value = diffusion.noise_prediction_error(eps, np.zeros((2, 3), dtype=np.float32))
        assert value.dtype == tf.float32
        assert float(value) == 1.0

    def test_loss_is_squared_error_of_noised_batch(self, rng):
        schedule = diffusion.make_schedule(50, 1e-4, 0.02)
        z0 = rng.uniform(-1, 1, (4, 4, 4, 3))
        t = rng.integers(1, 51, 4)
        eps = rng.standard_normal(z0.shape)

        def predict(z_t, steps):
            return 0.5 * z_t

        expected = diffusion.noise_prediction_error(
            eps, predict(diffusion.forward_noise(z0, t, eps, schedule), t)
        )
        assert float(diffusion.loss_for_draws(predict, z0, t, eps, schedule)) == (
            pytest.approx(float(expected), abs=1e-12)
        )


class TestSamplers:
    def test_ddim_timesteps(self):
        steps = diffusion.ddim_timesteps(1000, 50)
        assert len(steps) == 50
        assert steps[0] == 1000 and steps[-1] == 1
        assert np.all(np.diff(steps) < 0)

    def test_ddim_timesteps_rejects_too_many(self):
        with pytest.raises(ValueError):
            diffusion.ddim_timesteps(10, 11)

    @pytest.mark.parametrize('sampler', ['ddim', 'ddpm'])
    def test_same_seed_same_output(self, sampler):
        schedule = diffusion.make_schedule(20, 1e-4, 0.02)
        first = diffusion.sample(zero_denoiser, schedule, 8, [3, 4], sampler, 5)
        second = diffusion.sample(zero_denoiser, schedule, 8, [3, 4], sampler, 5)
        np.testing.assert_array_equal(first, second)
        assert first.shape == (2, 8, 8, 3)
        assert first.min() >= 0.0 and first.max() <= 1.0

    def test_seeds_are_independent_streams(self):
        schedule = diffusion.make_schedule(20, 1e-4, 0.02)
        pair = diffusion.sample(zero_denoiser, schedule, 8, [3, 4], 'ddim', 5)
        alone = diffusion.sample(zero_denoiser, schedule, 8, [4], 'ddim', 5)
        np.testing.assert_array_equal(pair[1], alone[0])
        assert not np.array_equal(pair[0], pair[1])

    def test_single_step_closed_form(self):
        schedule = diffusion.make_schedule(1, 0.5, 0.5)

        def denoiser(z_t, t):
            return 0.5 * z_t

        z = np.random.default_rng(8).standard_normal((1, 4, 4, 3))
        z0_hat = (z - np.sqrt(0.5) * 0.5 * z) / np.sqrt(0.5)
        expected = diffusion.to_image_range(z0_hat)
        ddim = diffusion.sample_ddim(denoiser, schedule, 4, [8], 1)
        ddpm = diffusion.sample_ddpm(denoiser, schedule, 4, [8])
        np.testing.assert_allclose(ddim, expected, atol=1e-12)
        np.testing.assert_allclose(ddpm, expected, atol=1e-12)

    def test_non_finite_state(self):
        schedule = diffusion.make_schedule(5, 1e-4, 0.02)
        with pytest.raises(NonFiniteError):
            diffusion.sample_ddpm(
                lambda z_t, t: np.full_like(z_t, np.nan), schedule, 4, [0]
            )

    def test_unknown_sampler(self):
        schedule = diffusion.make_schedule(5, 1e-4, 0.02)
        with pytest.raises(ValueError):
            diffusion.sample(zero_denoiser, schedule, 4, [0], 'euler')
