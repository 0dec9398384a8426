#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Diffusion generator commands."""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

from guidedicm.generator import decode, train

CLI_COMMANDS = {
    'train-base': train.train_base_cli,
    'train-control': train.train_control_cli,
    'decode-human': decode.decode_human_cli,
}
