#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Evaluation and rate-distortion commands."""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

from guidedicm.evaluator import evaluate, rate

CLI_COMMANDS = {
    'eval': evaluate.eval_cli,
    'import-rd': rate.import_rd_cli,
    'compare': rate.compare_cli,
    'plot-rd': rate.plot_rd_cli,
}
