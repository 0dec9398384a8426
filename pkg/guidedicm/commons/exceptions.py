#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Domain errors.

Each error also derives from the closest built-in exception,
so callers may catch either.
"""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'


class GuidedIcmError(Exception):
    """Base class for all guidedicm errors."""


class ImageFileError(GuidedIcmError, ValueError):
    """An image file exists but cannot be decoded."""


class BitstreamError(GuidedIcmError, ValueError):
    """A machine bitstream is malformed."""


class TruncatedStreamError(BitstreamError):
    """The range decoder ran out of bytes."""


class NonFiniteError(GuidedIcmError, ArithmeticError):
    """NaN or Inf showed up in a network output, a sampler state or a loss."""


class CheckpointMismatchError(GuidedIcmError, ValueError):
    """A checkpoint does not fit the model or the base it is paired with."""


class ConfigError(GuidedIcmError, ValueError):
    """An experiment config is invalid."""


class RatePointError(GuidedIcmError, ValueError):
    """Rate points cannot be parsed or compared."""
