#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Dataset commands."""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

from guidedicm.dataset import procedural

CLI_COMMANDS = {'gen-data': procedural.gen_data_cli}
