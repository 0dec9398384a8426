#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Pixel-space denoising diffusion: noise schedule, forward process,
noise-prediction loss, and the DDPM and DDIM samplers.

Images live in ``[-1, 1]`` inside the process and in ``[0, 1]`` outside.
Samplers take a *denoiser*, any callable mapping a batch ``z_t`` of shape
``(n, size, size, 3)`` and a batch of integer steps ``t`` to the predicted noise.
Conditioning, when present, is bound into the denoiser.
"""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import tensorflow as tf
from tqdm import tqdm

from guidedicm.commons import constants, keys
from guidedicm.commons import localizations as loc
from guidedicm.commons.exceptions import NonFiniteError

LOGGER = logging.getLogger(__name__)

Denoiser = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class NoiseSchedule:
    betas: np.ndarray
    alphas_cumprod: np.ndarray

    @property
    def steps(self) -> int:
        return len(self.betas)

    @property
    def alphas(self) -> np.ndarray:
        return 1.0 - self.betas

    def alpha_bar(self, t) -> np.ndarray:
        """``ᾱ_t`` for steps in ``[0, T]``, with ``ᾱ_0 = 1``."""
        t = np.asarray(t)
        padded = np.concatenate([[1.0], self.alphas_cumprod])
        return padded[t]


def make_schedule(
    steps: int = constants.SCHEDULE_PARAMS['steps'],
    beta_start: float = constants.SCHEDULE_PARAMS['beta_start'],
    beta_end: float = constants.SCHEDULE_PARAMS['beta_end'],
) -> NoiseSchedule:
    """Linear beta schedule.

    :param steps: number of diffusion steps ``T >= 1``
    :param beta_start: first beta, ``0 < beta_start <= beta_end``
    :param beta_end: last beta, ``< 1``
    :return: the schedule, with ``ᾱ`` as the cumulative product of ``1 - β``
    """
    if steps < 1 or not 0 < beta_start <= beta_end < 1:
        err_msg = loc.BAD_SCHEDULE % (
            f'steps={steps}, beta_start={beta_start}, beta_end={beta_end}'
        )
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)

    betas = np.linspace(beta_start, beta_end, steps, dtype=np.float64)
    return NoiseSchedule(betas, np.cumprod(1.0 - betas))


def schedule_from_dict(document: dict) -> NoiseSchedule:
    return make_schedule(
        document['steps'], document['beta_start'], document['beta_end']
    )


def _check_steps(t, schedule: NoiseSchedule) -> np.ndarray:
    t = np.asarray(t)
    if t.size and (t.min() < 1 or t.max() > schedule.steps):
        err_msg = loc.BAD_TIMESTEP % (t, schedule.steps)
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)
    return t


def _per_item(values: np.ndarray, ndim: int) -> np.ndarray:
    # Broadcast one scalar per batch item over the remaining axes
    return np.reshape(values, np.shape(values) + (1,) * (ndim - np.ndim(values)))


def forward_noise(z0, t, eps, schedule: NoiseSchedule) -> np.ndarray:
    """``z_t = sqrt(ᾱ_t) z0 + sqrt(1 - ᾱ_t) eps``.

    :param z0: clean tensor, or a batch of them
    :param t: a step in ``[1, T]``, or one step per batch item
    :param eps: noise, same shape as ``z0``
    :param schedule: the noise schedule
    :return: the noised tensor
    """
    z0 = np.asarray(z0)
    eps = np.asarray(eps)
    if z0.shape != eps.shape:
        err_msg = loc.SHAPE_MISMATCH % (z0.shape, eps.shape)
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)

    alpha_bar = _per_item(schedule.alpha_bar(_check_steps(t, schedule)), z0.ndim)
    return (np.sqrt(alpha_bar) * z0 + np.sqrt(1.0 - alpha_bar) * eps).astype(
        z0.dtype, copy=False
    )


def check_finite(values, what: str, step) -> None:
    if not np.all(np.isfinite(values)):
        err_msg = loc.NON_FINITE % (what, step)
        LOGGER.critical(err_msg)
        raise NonFiniteError(err_msg)


def predict_noise(model, z_t, t, control=None) -> np.ndarray:
    """Run the noise predictor in inference mode.

    :param model: a :class:`~guidedicm.generator.networks.NoisePredictor`
    :param z_t: batch of noised images, ``(n, size, size, 3)``
    :param t: one step per batch item
    :param control: optional ``(skip_residuals, mid_residual)`` from a control branch
    :return: predicted noise, same shape as ``z_t``
    :raises ValueError: if ``z_t`` does not match the architecture
    :raises NonFiniteError: if the prediction holds NaN or Inf
    """
    size = model.architecture.image_size
    z_t = np.asarray(z_t)
    if z_t.shape[1:] != (size, size, 3):
        err_msg = loc.SHAPE_MISMATCH % (z_t.shape[1:], (size, size, 3))
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)

    t = np.broadcast_to(np.asarray(t, dtype=np.int32), (z_t.shape[0],))
    eps_hat = np.asarray(model(z_t, t, control=control, training=False))
    check_finite(eps_hat, 'predicted noise', t[0])
    return eps_hat


def draw_noise(
    rng: np.random.Generator, shape: Tuple[int, ...], schedule: NoiseSchedule
) -> Tuple[np.ndarray, np.ndarray]:
    """One uniform step in ``[1, T]`` per item and standard normal noise."""
    t = rng.integers(1, schedule.steps + 1, size=shape[0])
    eps = rng.standard_normal(shape)
    return t, eps


def noise_prediction_error(eps, eps_hat):
    """Mean squared difference between drawn and predicted noise, as a scalar tensor.

    ``eps`` is cast to the dtype of ``eps_hat``.
    """
    eps_hat = tf.convert_to_tensor(eps_hat)
    return tf.reduce_mean(tf.square(tf.cast(eps, eps_hat.dtype) - eps_hat))


def loss_for_draws(predict: Callable, z0, t, eps, schedule: NoiseSchedule):
    """Mean squared noise-prediction error for given step and noise draws.

    :param predict: callable ``(z_t, t) -> eps_hat``, differentiable if gradients are needed
    :param z0: clean batch in ``[-1, 1]``
    :param t: one step per item
    :param eps: noise batch
    :param schedule: the noise schedule
    :return: scalar tensor
    """
    z0 = np.asarray(z0)
    if z0.shape[0] == 0:
        LOGGER.critical(loc.EMPTY_BATCH)
        raise ValueError(loc.EMPTY_BATCH)

    eps = np.asarray(eps, dtype=z0.dtype)
    z_t = forward_noise(z0, t, eps, schedule)
    eps_hat = predict(z_t, np.asarray(t, dtype=np.int32))
    return noise_prediction_error(eps, eps_hat)


def training_loss(
    predict: Callable, z0, schedule: NoiseSchedule, rng: np.random.Generator
):
    """Noise-prediction loss with fresh step and noise draws from ``rng``."""
    z0 = np.asarray(z0)
    if z0.shape[0] == 0:
        LOGGER.critical(loc.EMPTY_BATCH)
        raise ValueError(loc.EMPTY_BATCH)
    t, eps = draw_noise(rng, z0.shape, schedule)
    return loss_for_draws(predict, z0, t, eps, schedule)


def to_model_range(images: np.ndarray) -> np.ndarray:
    return np.asarray(images) * 2.0 - 1.0


def to_image_range(z: np.ndarray) -> np.ndarray:
    return np.clip((np.asarray(z, dtype=np.float64) + 1.0) / 2.0, 0.0, 1.0)


def _standard_normal(rngs, size: int) -> np.ndarray:
    return np.stack([rng.standard_normal((size, size, 3)) for rng in rngs])


def ddim_timesteps(total: int, steps: int) -> np.ndarray:
    """Uniform descending subsequence of ``[T, 1]`` with ``steps`` entries."""
    if not 1 <= steps <= total:
        err_msg = loc.BAD_TIMESTEP % (steps, total)
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)
    # Round half up: spacing is at least 1, so the steps stay distinct
    rounded = np.floor(np.linspace(total, 1, steps) + 0.5).astype(np.int64)
    return np.unique(rounded)[::-1]


def sample_ddpm(
    denoiser: Denoiser,
    schedule: NoiseSchedule,
    image_size: int,
    seeds: Sequence[int],
    progress: bool = False,
) -> np.ndarray:
    """Ancestral sampling from pure noise, one independent RNG stream per seed.

    :param denoiser: callable ``(z_t, t) -> eps_hat``
    :param schedule: the noise schedule
    :param image_size: side of the square images
    :param seeds: one seed per image
    :param progress: show a progress bar over steps
    :return: images in ``[0, 1]``, shape ``(len(seeds), size, size, 3)``
    :raises NonFiniteError: if the state becomes NaN or Inf
    """
    rngs = [np.random.default_rng(seed) for seed in seeds]
    z = _standard_normal(rngs, image_size)
    alphas = schedule.alphas

    for t in tqdm(range(schedule.steps, 0, -1), disable=not progress, desc=keys.DDPM):
        batch_t = np.full(len(rngs), t, dtype=np.int32)
        eps_hat = np.asarray(denoiser(z, batch_t), dtype=np.float64)
        alpha_bar = schedule.alpha_bar(t)
        beta = schedule.betas[t - 1]

        z = (z - beta / np.sqrt(1.0 - alpha_bar) * eps_hat) / np.sqrt(alphas[t - 1])
        if t > 1:
            variance = beta * (1.0 - schedule.alpha_bar(t - 1)) / (1.0 - alpha_bar)
            z = z + np.sqrt(variance) * _standard_normal(rngs, image_size)
        check_finite(z, 'DDPM state', t)

    return to_image_range(z)


def sample_ddim(
    denoiser: Denoiser,
    schedule: NoiseSchedule,
    image_size: int,
    seeds: Sequence[int],
    steps: int,
    progress: bool = False,
) -> np.ndarray:
    """Deterministic DDIM sampling (``η = 0``) over ``steps`` uniform timesteps.

    Only the initial noise depends on the seeds.
    See :func:`sample_ddpm` for the other parameters.
    """
    rngs = [np.random.default_rng(seed) for seed in seeds]
    z = _standard_normal(rngs, image_size)
    timesteps = ddim_timesteps(schedule.steps, steps)

    for index, t in enumerate(
        tqdm(timesteps, disable=not progress, desc=keys.DDIM)
    ):
        t = int(t)
        previous = int(timesteps[index + 1]) if index + 1 < len(timesteps) else 0
        batch_t = np.full(len(rngs), t, dtype=np.int32)
        eps_hat = np.asarray(denoiser(z, batch_t), dtype=np.float64)

        alpha_bar = schedule.alpha_bar(t)
        alpha_bar_previous = schedule.alpha_bar(previous)
        z0_hat = (z - np.sqrt(1.0 - alpha_bar) * eps_hat) / np.sqrt(alpha_bar)
        z = np.sqrt(alpha_bar_previous) * z0_hat + np.sqrt(
            1.0 - alpha_bar_previous
        ) * eps_hat
        check_finite(z, 'DDIM state', t)

    return to_image_range(z)


def sample(
    denoiser: Denoiser,
    schedule: NoiseSchedule,
    image_size: int,
    seeds: Sequence[int],
    sampler: str = keys.DDIM,
    steps: Optional[int] = None,
    progress: bool = False,
) -> np.ndarray:
    """Dispatch to the configured sampler."""
    if sampler == keys.DDPM:
        return sample_ddpm(denoiser, schedule, image_size, seeds, progress)
    if sampler == keys.DDIM:
        return sample_ddim(
            denoiser,
            schedule,
            image_size,
            seeds,
            steps or constants.SAMPLING_PARAMS['steps'],
            progress,
        )

    err_msg = loc.UNKNOWN_SAMPLER % (sampler, constants.SAMPLERS)
    LOGGER.critical(err_msg)
    raise ValueError(err_msg)
