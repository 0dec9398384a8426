#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""The command line interface entry point."""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import logging

import click
import tensorflow as tf

from guidedicm import pipeline as pipeline_cli
from guidedicm.codec import cli as codec_cli
from guidedicm.commons import logging as guidedicm_logging
from guidedicm.commons.exceptions import GuidedIcmError
from guidedicm.dataset import cli as dataset_cli
from guidedicm.evaluator import cli as evaluator_cli
from guidedicm.generator import cli as generator_cli

# Only TensorFlow errors get through
tf.get_logger().setLevel(logging.ERROR)

CLI_COMMANDS = {
    **dataset_cli.CLI_COMMANDS,
    **codec_cli.CLI_COMMANDS,
    **generator_cli.CLI_COMMANDS,
    **evaluator_cli.CLI_COMMANDS,
    'run': pipeline_cli.cli,
}

logging.getLogger('matplotlib').setLevel(logging.WARNING)
logging.getLogger('PIL').setLevel(logging.WARNING)


def error_line(error: BaseException) -> str:
    """One machine-parseable line: ``error=<class> message=<text>``."""
    message = ' '.join(str(error).split())
    return f'error={type(error).__name__} message={message}'


class GuidedIcmGroup(click.Group):
    """Command group that turns known failures into one stderr line and exit 1."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except (GuidedIcmError, OSError, ValueError) as error:
            click.echo(error_line(error), err=True)
            ctx.exit(1)


@click.group(cls=GuidedIcmGroup, commands=CLI_COMMANDS)
@click.option(
    '-l',
    '--log-level',
    type=(str, click.Choice(guidedicm_logging.LEVELS)),
    multiple=True,
    help=(
        'Module name followed by one of '
        '[DEBUG, INFO, WARNING, ERROR, CRITICAL]. '
        'Multiple pairs allowed.'
    ),
)
@click.pass_context
def cli(ctx, log_level):
    """Image coding for machines with a zero-bitrate human-viewing extension."""
    guidedicm_logging.setup()
    for module, level in log_level:
        guidedicm_logging.set_log_level(module, level)
