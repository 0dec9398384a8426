#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Machine codec commands."""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import logging
import os

import click

from guidedicm.codec import machine
from guidedicm.commons import constants, imaging
from guidedicm.commons.config import config_options, load_config

LOGGER = logging.getLogger(__name__)


@click.command(name='encode')
@click.argument('image', type=click.Path(dir_okay=False))
@config_options
@click.option(
    '-o',
    '--out',
    type=click.Path(dir_okay=False),
    help=f'Output bitstream. Default: IMAGE with the '
    f'{constants.BITSTREAM_EXTENSION} extension.',
)
def encode_cli(image, config, profile, workdir, out):
    """Encode IMAGE into a machine bitstream with the configured codec."""
    cfg = load_config(config, profile, workdir)
    bitstream = machine.encode_machine(imaging.load_image(image), cfg.codec)
    out = out or os.path.splitext(image)[0] + constants.BITSTREAM_EXTENSION
    machine.write_bitstream(bitstream, out)
    LOGGER.info(
        "'%s' encoded to '%s': %d bytes, %.4f bpp",
        image,
        out,
        bitstream.total_bytes,
        machine.rate_bpp(bitstream),
    )


@click.command(name='decode-machine')
@click.argument('bitstream', type=click.Path(dir_okay=False))
@click.option(
    '-o',
    '--out',
    type=click.Path(dir_okay=False),
    help='Output PNG file. Default: BITSTREAM with the .png extension.',
)
def decode_machine_cli(bitstream, out):
    """Render the machine decode of BITSTREAM."""
    image = machine.decode_machine(machine.read_bitstream(bitstream))
    out = out or os.path.splitext(bitstream)[0] + '.png'
    imaging.save_image(image, out)
    LOGGER.info("Machine decode of '%s' saved to '%s'", bitstream, out)


CLI_COMMANDS = {'encode': encode_cli, 'decode-machine': decode_machine_cli}
