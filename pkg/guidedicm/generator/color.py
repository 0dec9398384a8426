#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Color controller: keep the luma of the generated image,
take the chroma of the machine decode."""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import logging

import numpy as np

from guidedicm.commons import imaging

LOGGER = logging.getLogger(__name__)


def apply_cc(generated: np.ndarray, machine_decode: np.ndarray) -> np.ndarray:
    """Combine ``Y(generated)`` with ``Cb, Cr(machine_decode)``, clamped to ``[0, 1]``.

    :param generated: RGB image from the diffusion model
    :param machine_decode: RGB machine decode of the same size
    :return: RGB image
    :raises ValueError: if sizes differ
    """
    imaging.check_same_shape(generated, machine_decode)
    luma = imaging.rgb_to_ycc(generated).y
    chroma = imaging.rgb_to_ycc(machine_decode)
    return imaging.ycc_to_rgb(imaging.YccImage(luma, chroma.cb, chroma.cr))


def cc_enabled_pipeline(
    flag: bool, generated: np.ndarray, machine_decode: np.ndarray
) -> np.ndarray:
    """:func:`apply_cc` when ``flag`` is on, ``generated`` untouched otherwise."""
    imaging.check_same_shape(generated, machine_decode)
    if not flag:
        return generated
    return apply_cc(generated, machine_decode)
