#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Image quality metrics: PSNR, SSIM, perceptual distance, FID and KID."""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import logging
import math
from typing import NamedTuple, Tuple

import numpy as np
from scipy import linalg, ndimage
from skimage.metrics import structural_similarity

from guidedicm.commons import constants, imaging
from guidedicm.commons import localizations as loc
from guidedicm.evaluator.embedders import RandomConvEmbedder, paired_feature_maps

LOGGER = logging.getLogger(__name__)


class GaussianFit(NamedTuple):
    mean: np.ndarray
    cov: np.ndarray


class KidEstimate(NamedTuple):
    mean: float
    std_err: float


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB with peak 1.0, capped at 99 dB.

    :raises ValueError: if shapes differ
    """
    imaging.check_same_shape(a, b)
    mse = float(np.mean((np.asarray(a, np.float64) - np.asarray(b, np.float64)) ** 2))
    if mse == 0.0:
        return constants.PSNR_CAP
    return min(10.0 * math.log10(1.0 / mse), constants.PSNR_CAP)


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Single-scale SSIM of the luma planes.

    Gaussian 11x11 window with sigma 1.5, population statistics,
    mean over window positions that fit inside the image.

    :raises ValueError: if shapes differ or a side is below 11 pixels
    """
    imaging.check_same_shape(a, b)
    height, width = np.shape(a)[:2]
    if min(height, width) < constants.SSIM_WINDOW:
        err_msg = loc.IMAGE_TOO_SMALL % (constants.SSIM_WINDOW, height, width)
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)

    return float(
        structural_similarity(
            imaging.luma(a),
            imaging.luma(b),
            win_size=constants.SSIM_WINDOW,
            gaussian_weights=True,
            sigma=constants.SSIM_SIGMA,
            use_sample_covariance=False,
            data_range=1.0,
            K1=constants.SSIM_K1,
            K2=constants.SSIM_K2,
        )
    )


def laplacian_energy(img: np.ndarray) -> float:
    """Mean squared Laplacian of the luma plane, replicate borders.

    A high-frequency texture probe: smooth images score close to 0.
    """
    return float(np.mean(ndimage.laplace(imaging.luma(img), mode='nearest') ** 2))


def _unit_normalize(features: np.ndarray) -> np.ndarray:
    norm = np.sqrt(np.sum(features**2, axis=-1, keepdims=True))
    return features / (norm + constants.LPIPS_EPSILON)


def perceptual_distance(
    a: np.ndarray, b: np.ndarray, embedder: RandomConvEmbedder
) -> float:
    """LPIPS-style distance with unit layer weights.

    Per layer: unit-normalize every spatial feature vector along channels,
    sum the squared differences over channels, average over space.
    Layers are summed.

    :raises ValueError: if shapes differ
    """
    imaging.check_same_shape(a, b)
    distance = 0.0
    for map_a, map_b in paired_feature_maps(a, b, embedder):
        difference = _unit_normalize(map_a) - _unit_normalize(map_b)
        distance += float(np.mean(np.sum(difference**2, axis=-1)))
    return distance


def fit_gaussian(embedding: np.ndarray) -> GaussianFit:
    """Sample mean and symmetrized unbiased covariance of embedding rows.

    :raises ValueError: with fewer than 2 rows
    """
    embedding = np.asarray(embedding, dtype=np.float64)
    if embedding.ndim != 2 or embedding.shape[0] < constants.MIN_SET_SAMPLES:
        err_msg = loc.FEW_SAMPLES % (
            constants.MIN_SET_SAMPLES, embedding.shape[0] if embedding.ndim else 0
        )
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)

    cov = np.cov(embedding, rowvar=False, ddof=1)
    cov = np.atleast_2d(cov)
    return GaussianFit(embedding.mean(axis=0), (cov + cov.T) / 2.0)


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    eigenvalues, eigenvectors = linalg.eigh((matrix + matrix.T) / 2.0)
    lowest = float(eigenvalues.min())
    if lowest < constants.FID_EIGENVALUE_TOLERANCE:
        err_msg = loc.INVALID_COVARIANCE % (lowest, constants.FID_EIGENVALUE_TOLERANCE)
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)
    roots = np.sqrt(np.clip(eigenvalues, 0.0, None))
    return (eigenvectors * roots) @ eigenvectors.T


def fid(fit1: GaussianFit, fit2: GaussianFit) -> float:
    """Fréchet distance between two Gaussian fits.

    Matrix square roots come from symmetric eigendecompositions,
    so the result stays real.

    :raises ValueError: on a dimension mismatch or an invalid covariance
    """
    if fit1.mean.shape != fit2.mean.shape or fit1.cov.shape != fit2.cov.shape:
        err_msg = loc.SHAPE_MISMATCH % (fit1.cov.shape, fit2.cov.shape)
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)

    root1 = _psd_sqrt(fit1.cov)
    cross = _psd_sqrt(root1 @ fit2.cov @ root1)
    offset = fit1.mean - fit2.mean
    value = float(
        offset @ offset
        + np.trace(fit1.cov)
        + np.trace(fit2.cov)
        - 2.0 * np.trace(cross)
    )
    return max(value, 0.0)


def polynomial_kernel(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Cubic kernel ``(x . y / d + 1) ** 3`` between all rows of ``x`` and ``y``."""
    dim = np.shape(x)[-1]
    return (np.asarray(x) @ np.asarray(y).T / dim + 1.0) ** 3


def _mmd_block(x: np.ndarray, y: np.ndarray) -> float:
    m = x.shape[0]
    k_xx = polynomial_kernel(x, x)
    k_yy = polynomial_kernel(y, y)
    k_xy = polynomial_kernel(x, y)
    within_x = (k_xx.sum() - np.trace(k_xx)) / (m * (m - 1))
    within_y = (k_yy.sum() - np.trace(k_yy)) / (m * (m - 1))
    return float(within_x + within_y - 2.0 * k_xy.mean())


def kid_blocking(n_x: int, n_y: int) -> Tuple[int, int]:
    """Block size ``min(n, 100)`` and number of blocks ``n // size``."""
    n = min(n_x, n_y)
    size = min(n, constants.KID_MAX_BLOCK_SIZE)
    if size < constants.KID_MIN_BLOCK_SIZE:
        err_msg = loc.FEW_SAMPLES % (constants.KID_MIN_BLOCK_SIZE, n)
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)
    return size, n // size


def kid(x: np.ndarray, y: np.ndarray) -> KidEstimate:
    """Unbiased squared MMD under the cubic kernel, averaged over blocks.

    Consecutive blocks of ``size`` rows are compared pairwise.
    The standard error is NaN with a single block.

    :raises ValueError: if either set has fewer than 2 rows or dimensions differ
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[1:] != y.shape[1:]:
        err_msg = loc.SHAPE_MISMATCH % (x.shape[1:], y.shape[1:])
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)

    size, blocks = kid_blocking(len(x), len(y))
    estimates = np.array(
        [
            _mmd_block(
                x[block * size : (block + 1) * size],
                y[block * size : (block + 1) * size],
            )
            for block in range(blocks)
        ]
    )
    std_err = (
        float(np.std(estimates, ddof=1) / math.sqrt(blocks)) if blocks > 1 else math.nan
    )
    return KidEstimate(float(estimates.mean()), std_err)
