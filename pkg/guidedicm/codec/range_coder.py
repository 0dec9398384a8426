#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Adaptive binary range coder with per-context probability models.

The coder keeps a 32-bit ``low`` / ``range`` pair with carry propagation
through a cached byte, as in LZMA-style binary coders.
Each context holds the probability of a ``1`` bit as a 12-bit integer,
initialized to one half and adapted with a shift of 5 after every bit.
"""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import logging
from typing import Iterable, List, Sequence

import numpy as np

from guidedicm.commons import constants
from guidedicm.commons import localizations as loc
from guidedicm.commons.exceptions import TruncatedStreamError

LOGGER = logging.getLogger(__name__)

_MASK_32 = 0xFFFFFFFF


def _check_contexts(contexts: Sequence[int], n_contexts: int) -> np.ndarray:
    contexts = np.asarray(contexts, dtype=np.int64).ravel()
    if contexts.size == 0:
        return contexts

    highest, lowest = int(contexts.max()), int(contexts.min())
    if highest >= n_contexts or lowest < 0:
        err_msg = loc.CONTEXT_OUT_OF_RANGE % (
            highest if highest >= n_contexts else lowest,
            n_contexts,
        )
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)
    return contexts


def _adapt(probability: int, bit: int) -> int:
    # Truncating shifts keep the state inside (0, 4096)
    if bit:
        return probability + (
            (constants.RC_PROBABILITY_ONE - probability) >> constants.RC_ADAPTATION_SHIFT
        )
    return probability - (probability >> constants.RC_ADAPTATION_SHIFT)


class RangeEncoder:
    """Incremental binary encoder. Call :meth:`finish` once to get the bytes."""

    def __init__(self, n_contexts: int):
        self.n_contexts = n_contexts
        self.probabilities = [constants.RC_PROBABILITY_INIT] * n_contexts
        self.low = 0
        self.range = constants.RC_RANGE_INIT
        self.cache = 0
        self.cache_size = 1
        self.output = bytearray()

    def _shift_low(self):
        if self.low < 0xFF000000 or self.low > _MASK_32:
            carry = self.low >> 32
            byte = self.cache
            while True:
                self.output.append((byte + carry) & 0xFF)
                byte = 0xFF
                self.cache_size -= 1
                if self.cache_size == 0:
                    break
            self.cache = (self.low >> 24) & 0xFF
        self.cache_size += 1
        self.low = (self.low << 8) & _MASK_32

    def encode(self, bit: int, context: int):
        probability = self.probabilities[context]
        bound = (self.range >> constants.RC_PROBABILITY_BITS) * probability
        if bit:
            self.range = bound
        else:
            self.low += bound
            self.range -= bound
        self.probabilities[context] = _adapt(probability, bit)

        while self.range < constants.RC_TOP:
            self.range = (self.range << 8) & _MASK_32
            self._shift_low()

    def finish(self) -> bytes:
        for _ in range(constants.RC_FLUSH_BYTES + 1):
            self._shift_low()
        # The first byte out is the initial empty cache, always zero
        return bytes(self.output[1:])


class RangeDecoder:
    """Mirror of :class:`RangeEncoder` over a byte string."""

    def __init__(self, data: bytes, n_contexts: int):
        self.data = data
        self.position = 0
        self.probabilities = [constants.RC_PROBABILITY_INIT] * n_contexts
        self.range = constants.RC_RANGE_INIT
        self.code = 0
        for _ in range(constants.RC_FLUSH_BYTES):
            self.code = (self.code << 8) | self._next_byte()

    def _next_byte(self) -> int:
        if self.position >= len(self.data):
            err_msg = loc.TRUNCATED_STREAM % len(self.data)
            LOGGER.error(err_msg)
            raise TruncatedStreamError(err_msg)
        byte = self.data[self.position]
        self.position += 1
        return byte

    def decode(self, context: int) -> int:
        probability = self.probabilities[context]
        bound = (self.range >> constants.RC_PROBABILITY_BITS) * probability
        if self.code < bound:
            self.range = bound
            bit = 1
        else:
            self.code -= bound
            self.range -= bound
            bit = 0
        self.probabilities[context] = _adapt(probability, bit)

        while self.range < constants.RC_TOP:
            self.range = (self.range << 8) & _MASK_32
            self.code = ((self.code << 8) | self._next_byte()) & _MASK_32

        return bit


def rc_encode_bits(
    bits: Iterable[int], contexts: Sequence[int], n_contexts: int
) -> bytes:
    """Range-code a bit sequence, one adaptive model per context id.

    :param bits: binary sequence
    :param contexts: context id of each bit, same length as ``bits``
    :param n_contexts: number of distinct contexts
    :return: the coded bytes
    :raises ValueError: if lengths differ or a context id is out of range
    """
    bits = np.asarray(bits, dtype=np.int64).ravel()
    contexts = _check_contexts(contexts, n_contexts)
    if bits.size != contexts.size:
        err_msg = loc.LENGTH_MISMATCH % (bits.size, contexts.size)
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)

    if bits.size == 0:
        return b''

    encoder = RangeEncoder(n_contexts)
    for bit, context in zip(bits.tolist(), contexts.tolist()):
        encoder.encode(bit, context)
    data = encoder.finish()

    LOGGER.debug('Range-coded %d bits into %d bytes', bits.size, len(data))
    return data


def rc_decode_bits(
    data: bytes, contexts: Sequence[int], n_contexts: int
) -> List[int]:
    """Decode the output of :func:`rc_encode_bits` given the same contexts.

    :param data: coded bytes
    :param contexts: the context id sequence used at encode time
    :param n_contexts: number of distinct contexts
    :return: the decoded bits
    :raises TruncatedStreamError: if ``data`` runs out before all bits are decoded
    """
    contexts = _check_contexts(contexts, n_contexts)
    if contexts.size == 0:
        return []
    decoder = RangeDecoder(data, n_contexts)
    return [decoder.decode(context) for context in contexts.tolist()]
