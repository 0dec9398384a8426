#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Run the whole guidedicm pipeline."""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import gc
import logging
from typing import Callable, List, Optional

import click

from guidedicm.commons.config import config_options
from guidedicm.dataset.procedural import gen_data_cli
from guidedicm.evaluator.evaluate import eval_cli
from guidedicm.evaluator.rate import plot_rd_cli
from guidedicm.generator.train import train_base_cli, train_control_cli

LOGGER = logging.getLogger(__name__)


@click.command(name='run')
@config_options
@click.option(
    '--gen-data/--no-gen-data',
    default=True,
    help='Generate or ingest the dataset and write the split manifest. Default: yes.',
)
@click.option(
    '--train-base/--no-train-base',
    default=True,
    help='Stage 1: train the unconditioned diffusion model. Default: yes.',
)
@click.option(
    '--train-control/--no-train-control',
    default=True,
    help='Stage 2: train the control branch. Default: yes.',
)
@click.option(
    '--eval/--no-eval',
    'evaluate',
    default=True,
    help='Evaluate machine and human decodes. Default: yes.',
)
@click.option(
    '--plots/--no-plots',
    default=True,
    help='Draw RD plots from the work folder rate points. Default: yes.',
)
@click.option(
    '--resume', is_flag=True, help='Continue training from existing checkpoints.'
)
def cli(
    config: Optional[str],
    profile: str,
    workdir: Optional[str],
    gen_data: bool,
    train_base: bool,
    train_control: bool,
    evaluate: bool,
    plots: bool,
    resume: bool,
):
    """Launch the whole pipeline: data, both training stages, evaluation, plots."""
    args = _config_args(config, profile, workdir)
    train_args = args + ['--resume'] if resume else args

    stages = (
        ('gen-data', gen_data, gen_data_cli, args),
        ('train-base', train_base, train_base_cli, train_args),
        ('train-control', train_control, train_control_cli, train_args),
        ('eval', evaluate, eval_cli, args),
        ('plots', plots, plot_rd_cli, args),
    )
    for name, enabled, command, command_args in stages:
        if enabled:
            LOGGER.info('Running %s', name)
            _invoke_no_exit(command, command_args)
        else:
            LOGGER.info('Skipping %s', name)


def _config_args(
    config: Optional[str], profile: str, workdir: Optional[str]
) -> List[str]:
    args = ['--profile', profile]
    if config:
        args.extend(['--config', config])
    if workdir:
        args.extend(['--workdir', workdir])
    return args


def _invoke_no_exit(function: Callable, args: list):
    """Run a click command without letting it exit the program.

    Errors other than a clean exit propagate to the caller.
    """
    try:
        function(args)
    except SystemExit as exit_status:
        if exit_status.code not in (None, 0):
            raise
    LOGGER.debug('GC collect %s', gc.collect())
