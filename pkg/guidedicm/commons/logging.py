#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Logging set up: console records that coexist with progress bars,
a full ``debug.log`` in the working directory, per-module levels.

Drop a ``logging.json`` dictionary config in the working directory
to replace :data:`DEFAULT_CONFIG`.
"""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import json
import logging
import logging.config
import os
from io import StringIO

import pandas as pd
import tqdm

LEVELS = {
    'DEBUG': logging.DEBUG,
    'INFO': logging.INFO,
    'WARNING': logging.WARNING,
    'WARN': logging.WARNING,
    'ERROR': logging.ERROR,
    'CRITICAL': logging.CRITICAL,
}
CONFIG_FILE_PATH = os.path.abspath('logging.json')
DEBUG_LOG = 'debug.log'
DEFAULT_CONFIG = {
    'version': 1,
    'disable_existing_loggers': False,
    'loggers': {
        '': {'level': 'WARNING', 'handlers': ['console', 'debug_file']},
        'guidedicm': {'level': 'INFO'},
    },
    'formatters': {
        'console': {'format': '%(asctime)s [%(levelname)s] %(name)s - %(message)s'},
        'detailed': {
            'format': '%(asctime)s [%(levelname)s] '
            '%(name)s.%(funcName)s #%(lineno)d - %(message)s'
        },
    },
    'handlers': {
        'console': {
            'formatter': 'console',
            'class': 'guidedicm.commons.logging.TqdmLoggingHandler',
            'level': 'INFO',
        },
        'debug_file': {
            'formatter': 'detailed',
            'level': 'DEBUG',
            'filename': DEBUG_LOG,
            'mode': 'w',
            'class': 'logging.FileHandler',
            'encoding': 'utf8',
            'delay': True,
        },
    },
}


class TqdmLoggingHandler(logging.StreamHandler):
    """Write records through :func:`tqdm.tqdm.write`,
    so that running progress bars are redrawn below them."""

    def emit(self, record):
        try:
            tqdm.tqdm.write(self.format(record))
            self.flush()
        except (KeyboardInterrupt, SystemExit):
            raise
        except Exception:
            self.handleError(record)


def setup():
    """Apply ``logging.json`` from the working directory, or :data:`DEFAULT_CONFIG`."""
    if os.path.exists(CONFIG_FILE_PATH):
        with open(CONFIG_FILE_PATH) as fin:
            logging.config.dictConfig(json.load(fin))
    else:
        logging.config.dictConfig(DEFAULT_CONFIG)


def set_log_level(module, level):
    """Set the level of a module logger, ``root`` for the root one.

    Unknown level names are ignored.
    """
    if level in LEVELS:
        module = '' if module == 'root' else module
        logging.getLogger(module).setLevel(level)


def log_dataframe_info(logger: logging.Logger, dataframe: pd.DataFrame, message: str):
    """Debug record with the column summary of ``dataframe``."""
    if not logger.isEnabledFor(logging.DEBUG):
        return
    buffer = StringIO()
    dataframe.info(buf=buffer)
    logger.debug('%s: %s', message, buffer.getvalue())
