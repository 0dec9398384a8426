#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Control branch conditioning the frozen noise predictor on a machine decode.

The branch holds a trainable copy of the base time embedding and encoder.
The condition image goes through a small convolutional encoder
and is added to the copy's input features.
Every skip activation of the copy, plus its middle activation,
passes through a zero-initialized 1x1 coupling and is added to the
matching activation of the base before decoding.
At initialization all couplings are exactly zero,
so the conditioned base computes the unconditioned output.
"""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import logging
from typing import Callable, Optional

import keras
import numpy as np
from keras import layers, ops

from guidedicm.commons import constants, imaging
from guidedicm.commons import localizations as loc
from guidedicm.commons.exceptions import CheckpointMismatchError
from guidedicm.generator import diffusion
from guidedicm.generator.networks import (
    Architecture,
    NoisePredictor,
    TimeEmbedding,
    UNetEncoder,
    dummy_inputs,
)

LOGGER = logging.getLogger(__name__)


def zero_coupling(channels: int, dtype) -> layers.Conv2D:
    return layers.Conv2D(
        channels,
        1,
        kernel_initializer='zeros',
        bias_initializer='zeros',
        dtype=dtype,
    )


class ConditionEncoder(layers.Layer):
    """Stride-1 convolutions from RGB to the base channel count, SiLU in between."""

    def __init__(self, out_channels: int, **kwargs):
        super().__init__(**kwargs)
        hidden = constants.CONDITION_ENCODER_CHANNELS
        self.convs = [
            layers.Conv2D(channels, 3, padding='same', dtype=self.dtype_policy)
            for channels in hidden + (out_channels,)
        ]

    def call(self, condition):
        h = condition
        for conv in self.convs[:-1]:
            h = ops.silu(conv(h))
        return self.convs[-1](h)


class ControlBranch(keras.Model):
    def __init__(self, architecture: Architecture, **kwargs):
        super().__init__(**kwargs)
        dtype = architecture.dtype
        self.architecture = architecture
        self.condition_encoder = ConditionEncoder(
            architecture.base_channels, dtype=dtype
        )
        self.time_embedding = TimeEmbedding(
            architecture.time_embedding_dim, dtype=dtype
        )
        self.encoder = UNetEncoder(architecture, dtype=dtype)
        self.skip_couplings = [
            zero_coupling(channels, dtype) for channels in self.encoder.skip_channels
        ]
        self.mid_coupling = zero_coupling(self.encoder.mid_channels, dtype)

    def encode_condition(self, condition):
        return self.condition_encoder(ops.cast(condition, self.architecture.dtype))

    def call(self, z_t, t, features):
        """Residuals ``(skip_residuals, mid_residual)`` for the base network."""
        z_t = ops.cast(z_t, self.architecture.dtype)
        t_emb = self.time_embedding(t)
        h, skips = self.encoder(z_t, t_emb, hint=features)
        skip_residuals = [
            coupling(skip) for coupling, skip in zip(self.skip_couplings, skips)
        ]
        return skip_residuals, self.mid_coupling(h)


def init_control_branch(base: NoisePredictor, seed: int) -> ControlBranch:
    """Create a control branch for ``base``.

    The encoder and time embedding copy the base weights exactly,
    the condition encoder is drawn from ``seed``, the couplings are zero.

    :param base: a built noise predictor
    :param seed: seed of the condition encoder initialization
    :return: the built branch
    :raises CheckpointMismatchError: if the copied weights do not fit
    """
    arch = base.architecture
    keras.utils.set_random_seed(seed)
    branch = ControlBranch(arch)
    z, t = dummy_inputs(arch)
    branch(z, t, branch.encode_condition(np.zeros_like(z)))

    try:
        branch.time_embedding.set_weights(base.time_embedding.get_weights())
        branch.encoder.set_weights(base.encoder.get_weights())
    except ValueError as error:
        err_msg = loc.ARCHITECTURE_MISMATCH % ('encoder copy', error, arch)
        LOGGER.critical(err_msg)
        raise CheckpointMismatchError(err_msg) from error

    LOGGER.info(
        'Control branch initialized with %d parameters', branch.count_params()
    )
    return branch


def coupling_weights(branch: ControlBranch) -> list:
    """Kernels and biases of every zero coupling, skips first, middle last."""
    return [
        weight
        for coupling in list(branch.skip_couplings) + [branch.mid_coupling]
        for weight in coupling.get_weights()
    ]


def prepare_condition(machine_decodes: np.ndarray, image_size: int) -> np.ndarray:
    """Resize machine decodes to the diffusion resolution, in ``[-1, 1]``."""
    if isinstance(machine_decodes, np.ndarray) and machine_decodes.ndim == 3:
        machine_decodes = [machine_decodes]
    resized = np.stack(
        [
            image
            if image.shape[:2] == (image_size, image_size)
            else imaging.resize_bilinear(image, image_size, image_size)
            for image in machine_decodes
        ]
    )
    return diffusion.to_model_range(resized)


def encode_condition(branch: ControlBranch, condition: np.ndarray) -> np.ndarray:
    """Condition feature map at the diffusion input resolution.

    :param branch: the control branch
    :param condition: machine decodes as prepared by :func:`prepare_condition`
    :return: features of shape ``(n, size, size, base_channels)``
    """
    size = branch.architecture.image_size
    if np.shape(condition)[1:] != (size, size, 3):
        err_msg = loc.SHAPE_MISMATCH % (np.shape(condition)[1:], (size, size, 3))
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)
    return np.asarray(branch.encode_condition(condition))


def apply_control(
    base: NoisePredictor, branch: ControlBranch, z_t, t, features
) -> np.ndarray:
    """Predicted noise of the base with the branch residuals injected.

    :param base: frozen noise predictor
    :param branch: control branch
    :param z_t: batch of noised images
    :param t: one step per item
    :param features: condition features from :func:`encode_condition`
    :return: predicted noise
    """
    t = np.broadcast_to(np.asarray(t, dtype=np.int32), (np.shape(z_t)[0],))
    control = branch(z_t, t, features, training=False)
    return diffusion.predict_noise(base, z_t, t, control=control)


def make_denoiser(
    base: NoisePredictor,
    branch: Optional[ControlBranch] = None,
    condition: Optional[np.ndarray] = None,
) -> Callable:
    """Bind models and an optional condition into a sampler denoiser.

    Without a branch or a condition the base runs unconditioned.
    The condition features are computed once and reused at every step.
    """
    if branch is None or condition is None:
        return lambda z_t, t: diffusion.predict_noise(base, z_t, t)

    features = encode_condition(branch, condition)
    return lambda z_t, t: apply_control(base, branch, z_t, t, features)
