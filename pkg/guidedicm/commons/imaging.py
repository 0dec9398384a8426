#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Image containers, color transforms, resampling and PNG I/O.

An RGB image is a ``float64`` :class:`numpy.ndarray` of shape
``(height, width, 3)`` with values in ``[0, 1]``.
A YCbCr image is a :class:`YccImage` triple of planes in BT.601 full range.
All processing happens in floating point:
8-bit quantization only occurs when reading or writing files.
"""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import logging
import os
from typing import NamedTuple, Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from guidedicm.commons import constants
from guidedicm.commons import localizations as loc
from guidedicm.commons.exceptions import ImageFileError

LOGGER = logging.getLogger(__name__)


class YccImage(NamedTuple):
    """Luma plane in ``[0, 1]`` and chroma planes in ``[-0.5, 0.5]``."""

    y: np.ndarray
    cb: np.ndarray
    cr: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.y.shape


def check_rgb(img: np.ndarray, min_side: int = 1) -> np.ndarray:
    """Validate an RGB image and return it as a ``float64`` array.

    :param img: candidate image
    :param min_side: minimum allowed height and width
    :return: the image as ``float64``
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[-1] != 3:
        err_msg = loc.IMAGE_BAD_SHAPE % (img.shape,)
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)

    height, width = img.shape[:2]
    if height < min_side or width < min_side:
        err_msg = loc.IMAGE_TOO_SMALL % (min_side, height, width)
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)

    if not np.all(np.isfinite(img)):
        LOGGER.critical(loc.IMAGE_NOT_FINITE)
        raise ValueError(loc.IMAGE_NOT_FINITE)

    return img


def check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if np.shape(a) != np.shape(b):
        err_msg = loc.SHAPE_MISMATCH % (np.shape(a), np.shape(b))
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)


def rgb_to_ycc(img: np.ndarray) -> YccImage:
    """Convert an RGB image to BT.601 YCbCr, without quantization.

    :param img: RGB image
    :return: the luma and chroma planes
    """
    img = np.asarray(img, dtype=np.float64)
    red, green, blue = img[..., 0], img[..., 1], img[..., 2]

    y = constants.LUMA_R * red + constants.LUMA_G * green + constants.LUMA_B * blue
    # Coefficients are non-negative and sum to 1, so this only absorbs rounding
    y = np.clip(y, 0.0, 1.0)
    cb = constants.CHROMA_B * (blue - y)
    cr = constants.CHROMA_R * (red - y)

    return YccImage(y, cb, cr)


def ycc_to_rgb(ycc: YccImage) -> np.ndarray:
    """Invert :func:`rgb_to_ycc` and clamp each channel to ``[0, 1]``.

    :param ycc: luma and chroma planes of equal shape
    :return: RGB image
    """
    y, cb, cr = (np.asarray(plane, dtype=np.float64) for plane in ycc)
    check_same_shape(y, cb)
    check_same_shape(y, cr)

    red = y + cr / constants.CHROMA_R
    blue = y + cb / constants.CHROMA_B
    green = (y - constants.LUMA_R * red - constants.LUMA_B * blue) / constants.LUMA_G

    return np.clip(np.stack([red, green, blue], axis=-1), 0.0, 1.0)


def luma(img: np.ndarray) -> np.ndarray:
    return rgb_to_ycc(img).y


def _source_coordinates(in_size: int, out_size: int):
    # Half-pixel centers: output pixel x samples input at (x + 0.5) * in / out - 0.5
    scale = in_size / out_size
    source = (np.arange(out_size, dtype=np.float64) + 0.5) * scale - 0.5
    source = np.clip(source, 0.0, in_size - 1)
    lower = np.floor(source).astype(np.int64)
    upper = np.minimum(lower + 1, in_size - 1)
    return lower, upper, source - lower


def resize_bilinear(img: np.ndarray, new_h: int, new_w: int) -> np.ndarray:
    """Separable bilinear resampling with half-pixel-center alignment.

    Borders are replicated. Constant images stay exactly constant,
    and same-size resampling returns the input values unchanged.

    :param img: RGB image, or any ``(height, width, channels)`` array
    :param new_h: output height
    :param new_w: output width
    :return: the resampled image, clamped to ``[0, 1]``
    """
    if new_h < 1 or new_w < 1:
        err_msg = f'Target size must be positive, got {new_h}x{new_w}'
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)

    img = np.asarray(img, dtype=np.float64)
    height, width = img.shape[:2]

    top, bottom, row_weight = _source_coordinates(height, new_h)
    rows = img[top] + row_weight[:, None, None] * (img[bottom] - img[top])

    left, right, column_weight = _source_coordinates(width, new_w)
    out = rows[:, left] + column_weight[None, :, None] * (
        rows[:, right] - rows[:, left]
    )

    return np.clip(out, 0.0, 1.0)


def load_image(path: str) -> np.ndarray:
    """Read an 8-bit image file into an RGB image with values ``v / 255``.

    :param path: image file path
    :return: RGB image
    :raises FileNotFoundError: if the path does not exist
    :raises ImageFileError: if the file is not a decodable image
    :raises OSError: on any other read failure
    """
    if not os.path.isfile(path):
        err_msg = loc.IMAGE_NOT_FOUND % path
        LOGGER.error(err_msg)
        raise FileNotFoundError(err_msg)

    try:
        with Image.open(path) as pil_image:
            pixels = np.asarray(pil_image.convert('RGB'), dtype=np.uint8)
    except UnidentifiedImageError as error:
        err_msg = loc.IMAGE_UNREADABLE % (path, error)
        LOGGER.error(err_msg)
        raise ImageFileError(err_msg) from error

    LOGGER.debug('Loaded image %s of shape %s', path, pixels.shape)
    return check_rgb(
        pixels.astype(np.float64) / constants.PIXEL_LEVELS,
        constants.MIN_IMAGE_SIDE,
    )


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.clip(np.round(img * constants.PIXEL_LEVELS), 0, 255).astype(np.uint8)


def save_image(img: np.ndarray, path: str) -> None:
    """Write an RGB image to a lossless PNG file, quantized via ``round(v * 255)``.

    :param img: RGB image
    :param path: output file path. Parent folders are created
    """
    img = check_rgb(img)
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)

    try:
        Image.fromarray(to_uint8(img)).save(path, format='PNG')
    except OSError as error:
        LOGGER.error(loc.IMAGE_WRITE_FAILED, path, error)
        raise

    LOGGER.debug('Saved image to %s', path)
