#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Image feature extractors behind FID, KID and the perceptual distance.

The default embedder is a fixed-seed stack of random stride-2
convolutions, so values are reproducible without pretrained weights.
Any deterministic image-to-vector model exposing ``feature_maps``
and ``dim`` can replace it.
"""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import logging
from typing import List, Sequence

import keras
import numpy as np
from keras import layers, ops

from guidedicm.commons import constants, keys
from guidedicm.commons import localizations as loc

LOGGER = logging.getLogger(__name__)


class RandomConvEmbedder(keras.Model):
    """Seeded random stride-2 ReLU convolutions and global average pooling."""

    def __init__(
        self,
        channels: Sequence[int] = constants.RANDOM_CONV_PARAMS['channels'],
        kernel_size: int = constants.RANDOM_CONV_PARAMS['kernel_size'],
        seed: int = constants.RANDOM_CONV_PARAMS['seed'],
        **kwargs,
    ):
        super().__init__(**kwargs)
        self.embedder_id = f'{keys.RANDOM_CONV}-{seed}'
        self.convs = [
            layers.Conv2D(
                width,
                kernel_size,
                strides=2,
                padding='same',
                activation='relu',
                kernel_initializer=keras.initializers.HeNormal(seed=seed + index),
                bias_initializer='zeros',
            )
            for index, width in enumerate(channels)
        ]
        self.pool = layers.GlobalAveragePooling2D()

    @property
    def dim(self) -> int:
        return self.convs[-1].filters

    def feature_maps(self, images) -> list:
        h = ops.cast(images, 'float32') * 2.0 - 1.0
        maps = []
        for conv in self.convs:
            h = conv(h)
            maps.append(h)
        return maps

    def call(self, images):
        return self.pool(self.feature_maps(images)[-1])


def init_embedder(name: str = keys.RANDOM_CONV) -> RandomConvEmbedder:
    """Build an embedder by config name.

    :raises ValueError: if the name is not supported
    """
    if name not in constants.EMBEDDERS:
        err_msg = loc.UNKNOWN_EMBEDDER % (name, tuple(constants.EMBEDDERS))
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)

    embedder = RandomConvEmbedder()
    embedder(np.zeros((1, 16, 16, 3), dtype=np.float32))
    LOGGER.debug('Built embedder %s with d = %d', embedder.embedder_id, embedder.dim)
    return embedder


def _same_shape_groups(
    images: Sequence[np.ndarray], batch_size: int
) -> List[List[int]]:
    # Consecutive indices of equal shape, at most batch_size each
    groups, current = [], []
    for index, image in enumerate(images):
        if current and (
            len(current) == batch_size or images[current[0]].shape != image.shape
        ):
            groups.append(current)
            current = []
        current.append(index)
    if current:
        groups.append(current)
    return groups


def embed(
    images: Sequence[np.ndarray],
    embedder: RandomConvEmbedder,
    batch_size: int = constants.RANDOM_CONV_PARAMS['batch_size'],
) -> np.ndarray:
    """Embed images into an ``n x d`` matrix, one row per image, in input order.

    :param images: RGB images
    :param embedder: feature extractor
    :param batch_size: images per forward pass
    :return: float64 feature matrix
    :raises ValueError: if ``images`` is empty
    """
    if len(images) == 0:
        err_msg = loc.FEW_SAMPLES % (1, 0)
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)

    rows = [
        np.asarray(embedder(np.stack([images[i] for i in group])), dtype=np.float64)
        for group in _same_shape_groups(images, batch_size)
    ]
    return np.concatenate(rows)


def paired_feature_maps(
    a: np.ndarray, b: np.ndarray, embedder: RandomConvEmbedder
) -> List[tuple]:
    """Feature maps of two same-shape images, one ``(map_a, map_b)`` pair per layer."""
    maps = embedder.feature_maps(np.stack([a, b]))
    return [
        (np.asarray(layer[0], dtype=np.float64), np.asarray(layer[1], dtype=np.float64))
        for layer in maps
    ]
