#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Human decoding: sample an image conditioned on the machine decode.

The only coded input is the machine bitstream.
Models come from checkpoints, so the extension bitrate is zero.
"""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import logging
import os
from dataclasses import dataclass
from typing import List, Optional, Sequence

import click
import numpy as np

from guidedicm.codec import machine
from guidedicm.commons import checkpoints, constants, imaging, keys
from guidedicm.commons import localizations as loc
from guidedicm.commons.exceptions import BitstreamError
from guidedicm.generator import color, control, diffusion, train
from guidedicm.generator.networks import NoisePredictor

LOGGER = logging.getLogger(__name__)


@dataclass
class HumanDecoder:
    """Frozen base, control branch and schedule, ready to sample."""

    base: NoisePredictor
    branch: control.ControlBranch
    schedule: diffusion.NoiseSchedule

    @property
    def image_size(self) -> int:
        return self.base.architecture.image_size


def load_decoder(base_path: str, control_path: str) -> HumanDecoder:
    """Load a matching pair of checkpoints.

    :raises FileNotFoundError: if a checkpoint is missing
    :raises CheckpointMismatchError: if the control branch was trained on another base
    """
    base_checkpoint = checkpoints.load_checkpoint(base_path, keys.BASE)
    control_checkpoint = checkpoints.load_checkpoint(control_path, keys.CONTROL)
    base = train.load_base(base_checkpoint)
    branch = train.load_control(
        control_checkpoint, base, base_checkpoint, control_path, base_path
    )
    schedule = diffusion.schedule_from_dict(base_checkpoint.schedule)
    return HumanDecoder(base, branch, schedule)


def generate(
    decoder: HumanDecoder,
    conditions: Optional[Sequence[np.ndarray]],
    seeds: Sequence[int],
    sampler: str,
    steps: int,
    output_shapes: Sequence[tuple],
    batch_size: int = 16,
) -> List[np.ndarray]:
    """Sample one image per seed, resized back to its output shape.

    :param decoder: loaded models
    :param conditions: machine decodes, one per seed.
      ``None`` samples the base unconditioned
    :param seeds: per-image sampling seeds
    :param sampler: ``ddpm`` or ``ddim``
    :param steps: DDIM steps
    :param output_shapes: ``(height, width)`` per image
    :param batch_size: images sampled together
    :return: RGB images in ``[0, 1]``
    """
    size = decoder.image_size
    outputs = []
    for start in range(0, len(seeds), batch_size):
        stop = start + batch_size
        if conditions is None:
            denoiser = control.make_denoiser(decoder.base)
        else:
            condition = control.prepare_condition(list(conditions[start:stop]), size)
            denoiser = control.make_denoiser(decoder.base, decoder.branch, condition)

        samples = diffusion.sample(
            denoiser, decoder.schedule, size, seeds[start:stop], sampler, steps
        )
        for sample, (height, width) in zip(samples, output_shapes[start:stop]):
            outputs.append(
                sample
                if sample.shape[:2] == (height, width)
                else imaging.resize_bilinear(sample, height, width)
            )
    return outputs


def decode_human(
    bitstream: machine.MachineBitstream,
    decoder: HumanDecoder,
    sampler: str = keys.DDIM,
    steps: int = constants.SAMPLING_PARAMS['steps'],
    seed: int = constants.SAMPLING_PARAMS['seed'],
    cc: bool = True,
) -> np.ndarray:
    """Human-viewable decode of a machine bitstream.

    :param bitstream: the machine bitstream, the only coded input
    :param decoder: loaded models
    :param sampler: ``ddpm`` or ``ddim``
    :param steps: DDIM steps
    :param seed: sampling seed
    :param cc: take the chroma of the machine decode
    :return: RGB image with the bitstream dimensions
    """
    machine_image = machine.decode_machine(bitstream)
    generated = generate(
        decoder,
        [machine_image],
        [seed],
        sampler,
        steps,
        [machine_image.shape[:2]],
    )[0]
    return color.cc_enabled_pipeline(cc, generated, machine_image)


def check_bitstream_path(path: str) -> None:
    if not path.endswith(constants.BITSTREAM_EXTENSION):
        err_msg = loc.BAD_CONFIG_VALUE % (
            '--bitstream',
            path,
            f'Expected a {constants.BITSTREAM_EXTENSION} machine bitstream.',
        )
        LOGGER.critical(err_msg)
        raise BitstreamError(err_msg)


@click.command(name='decode-human')
@click.option(
    '--bitstream',
    required=True,
    type=click.Path(dir_okay=False),
    help=f'Machine bitstream ({constants.BITSTREAM_EXTENSION}).',
)
@click.option(
    '--base-ckpt',
    required=True,
    type=click.Path(dir_okay=False),
    help='Base model checkpoint.',
)
@click.option(
    '--control-ckpt',
    required=True,
    type=click.Path(dir_okay=False),
    help='Control branch checkpoint.',
)
@click.option(
    '--sampler',
    type=click.Choice(constants.SAMPLERS),
    default=constants.SAMPLING_PARAMS['sampler'],
    show_default=True,
)
@click.option(
    '--steps',
    type=click.IntRange(min=1),
    default=constants.SAMPLING_PARAMS['steps'],
    show_default=True,
    help='DDIM steps.',
)
@click.option(
    '--seed',
    type=int,
    default=constants.SAMPLING_PARAMS['seed'],
    show_default=True,
)
@click.option(
    '--cc',
    type=click.Choice(['on', 'off']),
    default='on',
    show_default=True,
    help='Color controller.',
)
@click.option(
    '-o',
    '--out',
    required=True,
    type=click.Path(dir_okay=False),
    help='Output PNG file.',
)
def decode_human_cli(bitstream, base_ckpt, control_ckpt, sampler, steps, seed, cc, out):
    """Decode a machine bitstream into a human-viewable image."""
    check_bitstream_path(bitstream)
    coded = machine.read_bitstream(bitstream)
    decoder = load_decoder(base_ckpt, control_ckpt)
    image = decode_human(coded, decoder, sampler, steps, seed, cc == 'on')
    imaging.save_image(image, out)
    LOGGER.info(
        "Human decode of '%s' saved to '%s', extension rate 0 bpp",
        os.path.basename(bitstream),
        out,
    )
