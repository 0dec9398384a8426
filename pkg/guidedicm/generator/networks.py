#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Keras noise-prediction U-Net.

The network is split into a time embedding, an encoder with a middle block,
and a decoder, so that a control branch can clone the first two
and inject residuals into the skip connections and the middle activation.
"""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Sequence, Tuple

import keras
import numpy as np
from keras import layers, ops

from guidedicm.commons import constants
from guidedicm.commons import localizations as loc
from guidedicm.commons.exceptions import CheckpointMismatchError

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class Architecture:
    """Shape descriptor of the noise-prediction network."""

    image_size: int = constants.ARCHITECTURE_PARAMS['image_size']
    base_channels: int = constants.ARCHITECTURE_PARAMS['base_channels']
    channel_multipliers: Tuple[int, ...] = constants.ARCHITECTURE_PARAMS[
        'channel_multipliers'
    ]
    num_res_blocks: int = constants.ARCHITECTURE_PARAMS['num_res_blocks']
    attention_resolutions: Tuple[int, ...] = constants.ARCHITECTURE_PARAMS[
        'attention_resolutions'
    ]
    norm_groups: int = constants.ARCHITECTURE_PARAMS['norm_groups']
    time_embedding_dim: int = constants.ARCHITECTURE_PARAMS['time_embedding_dim']
    dtype: str = 'float32'

    def __post_init__(self):
        object.__setattr__(
            self, 'channel_multipliers', tuple(self.channel_multipliers)
        )
        object.__setattr__(
            self, 'attention_resolutions', tuple(self.attention_resolutions)
        )

    @property
    def levels(self) -> int:
        return len(self.channel_multipliers)

    def to_dict(self) -> Dict[str, Any]:
        document = asdict(self)
        document['channel_multipliers'] = list(self.channel_multipliers)
        document['attention_resolutions'] = list(self.attention_resolutions)
        return document

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> 'Architecture':
        return cls(**document)


def sinusoidal_embedding(t, dim: int, dtype: str):
    half = dim // 2
    frequencies = ops.exp(
        -math.log(10000.0) * ops.arange(half, dtype=dtype) / half
    )
    arguments = ops.cast(ops.reshape(t, (-1, 1)), dtype) * ops.reshape(
        frequencies, (1, -1)
    )
    return ops.concatenate([ops.sin(arguments), ops.cos(arguments)], axis=-1)


class TimeEmbedding(layers.Layer):
    """Sinusoidal timestep features followed by a 2-layer MLP."""

    def __init__(self, dim: int, **kwargs):
        super().__init__(**kwargs)
        self.dim = dim
        self.hidden = layers.Dense(dim, activation='silu', dtype=self.dtype_policy)
        self.projection = layers.Dense(dim, dtype=self.dtype_policy)

    def call(self, t):
        features = sinusoidal_embedding(t, self.dim, self.compute_dtype)
        return self.projection(self.hidden(features))


class ResidualBlock(layers.Layer):
    # GroupNorm -> SiLU -> Conv, time injection, GroupNorm -> SiLU -> Conv, plus skip
    def __init__(self, in_channels: int, out_channels: int, groups: int, **kwargs):
        super().__init__(**kwargs)
        policy = self.dtype_policy
        self.out_channels = out_channels
        self.norm1 = layers.GroupNormalization(groups=groups, dtype=policy)
        self.conv1 = layers.Conv2D(out_channels, 3, padding='same', dtype=policy)
        self.time_projection = layers.Dense(out_channels, dtype=policy)
        self.norm2 = layers.GroupNormalization(groups=groups, dtype=policy)
        self.conv2 = layers.Conv2D(out_channels, 3, padding='same', dtype=policy)
        self.shortcut = (
            layers.Conv2D(out_channels, 1, dtype=policy)
            if in_channels != out_channels
            else layers.Identity(dtype=policy)
        )

    def call(self, x, t_emb):
        h = self.conv1(ops.silu(self.norm1(x)))
        time = self.time_projection(ops.silu(t_emb))
        h = h + ops.reshape(time, (-1, 1, 1, self.out_channels))
        h = self.conv2(ops.silu(self.norm2(h)))
        return h + self.shortcut(x)


class AttentionBlock(layers.Layer):
    """Single-head self-attention over spatial positions, with a residual."""

    def __init__(self, channels: int, groups: int, **kwargs):
        super().__init__(**kwargs)
        self.channels = channels
        self.norm = layers.GroupNormalization(groups=groups, dtype=self.dtype_policy)
        self.attention = layers.MultiHeadAttention(
            num_heads=1, key_dim=channels, dtype=self.dtype_policy
        )

    def call(self, x):
        height, width = x.shape[1], x.shape[2]
        sequence = ops.reshape(self.norm(x), (-1, height * width, self.channels))
        attended = self.attention(sequence, sequence)
        return x + ops.reshape(attended, (-1, height, width, self.channels))


def _attention_or_identity(arch: Architecture, resolution: int, channels: int, policy):
    if resolution in arch.attention_resolutions:
        return AttentionBlock(channels, arch.norm_groups, dtype=policy)
    return layers.Identity(dtype=policy)


class UNetEncoder(layers.Layer):
    """Input convolution, downsampling stages and the middle block.

    ``call`` returns the middle activation and every skip activation,
    in the order the decoder consumes them in reverse.
    """

    def __init__(self, arch: Architecture, **kwargs):
        super().__init__(**kwargs)
        policy = self.dtype_policy
        self.arch = arch

        channels = arch.base_channels
        self.conv_in = layers.Conv2D(channels, 3, padding='same', dtype=policy)
        self.skip_channels = [channels]
        self.res_blocks = []
        self.attentions = []
        self.downsamples = []

        resolution = arch.image_size
        for level, multiplier in enumerate(arch.channel_multipliers):
            out_channels = arch.base_channels * multiplier
            for _ in range(arch.num_res_blocks):
                self.res_blocks.append(
                    ResidualBlock(channels, out_channels, arch.norm_groups, dtype=policy)
                )
                self.attentions.append(
                    _attention_or_identity(arch, resolution, out_channels, policy)
                )
                channels = out_channels
                self.skip_channels.append(channels)
            if level < arch.levels - 1:
                self.downsamples.append(
                    layers.Conv2D(
                        channels, 3, strides=2, padding='same', dtype=policy
                    )
                )
                resolution //= 2
                self.skip_channels.append(channels)

        self.mid_channels = channels
        self.mid_block1 = ResidualBlock(
            channels, channels, arch.norm_groups, dtype=policy
        )
        self.mid_attention = AttentionBlock(channels, arch.norm_groups, dtype=policy)
        self.mid_block2 = ResidualBlock(
            channels, channels, arch.norm_groups, dtype=policy
        )

    def call(self, x, t_emb, hint=None):
        h = self.conv_in(x)
        if hint is not None:
            h = h + hint
        skips = [h]

        index = 0
        for level in range(self.arch.levels):
            for _ in range(self.arch.num_res_blocks):
                h = self.attentions[index](self.res_blocks[index](h, t_emb))
                skips.append(h)
                index += 1
            if level < self.arch.levels - 1:
                h = self.downsamples[level](h)
                skips.append(h)

        h = self.mid_block1(h, t_emb)
        h = self.mid_attention(h)
        h = self.mid_block2(h, t_emb)
        return h, skips


class UNetDecoder(layers.Layer):
    def __init__(
        self,
        arch: Architecture,
        skip_channels: Sequence[int],
        mid_channels: int,
        **kwargs,
    ):
        super().__init__(**kwargs)
        policy = self.dtype_policy
        self.arch = arch

        pending = list(skip_channels)
        channels = mid_channels
        resolution = arch.image_size // 2 ** (arch.levels - 1)
        self.res_blocks = []
        self.attentions = []
        self.upsamples = []
        for level in reversed(range(arch.levels)):
            out_channels = arch.base_channels * arch.channel_multipliers[level]
            for _ in range(arch.num_res_blocks + 1):
                self.res_blocks.append(
                    ResidualBlock(
                        channels + pending.pop(),
                        out_channels,
                        arch.norm_groups,
                        dtype=policy,
                    )
                )
                self.attentions.append(
                    _attention_or_identity(arch, resolution, out_channels, policy)
                )
                channels = out_channels
            if level > 0:
                self.upsamples.append(
                    keras.Sequential(
                        [
                            layers.UpSampling2D(2, dtype=policy),
                            layers.Conv2D(channels, 3, padding='same', dtype=policy),
                        ]
                    )
                )
                resolution *= 2

        self.norm_out = layers.GroupNormalization(
            groups=arch.norm_groups, dtype=policy
        )
        self.conv_out = layers.Conv2D(3, 3, padding='same', dtype=policy)

    def call(self, h, skips, t_emb):
        pending = list(skips)
        index = 0
        for level in reversed(range(self.arch.levels)):
            for _ in range(self.arch.num_res_blocks + 1):
                h = ops.concatenate([h, pending.pop()], axis=-1)
                h = self.attentions[index](self.res_blocks[index](h, t_emb))
                index += 1
            if level > 0:
                h = self.upsamples[self.arch.levels - 1 - level](h)
        return self.conv_out(ops.silu(self.norm_out(h)))


class NoisePredictor(keras.Model):
    """Predicts the noise added to ``z_t`` at step ``t``.

    ``control`` is an optional pair ``(skip_residuals, mid_residual)``
    added to the encoder outputs before decoding.
    """

    def __init__(self, architecture: Architecture, **kwargs):
        super().__init__(**kwargs)
        dtype = architecture.dtype
        self.architecture = architecture
        self.time_embedding = TimeEmbedding(
            architecture.time_embedding_dim, dtype=dtype
        )
        self.encoder = UNetEncoder(architecture, dtype=dtype)
        self.decoder = UNetDecoder(
            architecture,
            self.encoder.skip_channels,
            self.encoder.mid_channels,
            dtype=dtype,
        )

    def call(self, z_t, t, control=None):
        z_t = ops.cast(z_t, self.architecture.dtype)
        t_emb = self.time_embedding(t)
        h, skips = self.encoder(z_t, t_emb)
        if control is not None:
            skip_residuals, mid_residual = control
            skips = [skip + residual for skip, residual in zip(skips, skip_residuals)]
            h = h + mid_residual
        return self.decoder(h, skips, t_emb)


def dummy_inputs(arch: Architecture, batch_size: int = 1):
    size = arch.image_size
    return (
        np.zeros((batch_size, size, size, 3), dtype=arch.dtype),
        np.ones((batch_size,), dtype=np.int32),
    )


def build_noise_predictor(arch: Architecture, seed: int) -> NoisePredictor:
    """Create a noise predictor with seeded initial weights and build it."""
    keras.utils.set_random_seed(seed)
    model = NoisePredictor(arch)
    model(*dummy_inputs(arch))
    LOGGER.info(
        'Built noise predictor: %d parameters, architecture %s',
        model.count_params(),
        arch,
    )
    return model


def set_parameters(model: keras.Model, parameters: List[np.ndarray]) -> None:
    """Load ordered parameter tensors, checking them against the model."""
    expected = model.get_weights()
    if len(expected) != len(parameters):
        err_msg = loc.ARCHITECTURE_MISMATCH % (
            'count',
            len(parameters),
            len(expected),
        )
        LOGGER.critical(err_msg)
        raise CheckpointMismatchError(err_msg)

    for index, (current, loaded) in enumerate(zip(expected, parameters)):
        if current.shape != np.shape(loaded):
            err_msg = loc.ARCHITECTURE_MISMATCH % (
                index,
                np.shape(loaded),
                current.shape,
            )
            LOGGER.critical(err_msg)
            raise CheckpointMismatchError(err_msg)

    model.set_weights(parameters)
