#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Set of utilities."""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import hashlib
import logging
from typing import Callable, Iterable, Sequence

import numpy as np
from joblib import Parallel, delayed

LOGGER = logging.getLogger(__name__)


def derive_seed(seed: int, index: int) -> int:
    """Independent, reproducible seed for item ``index`` of a seeded run."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def image_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def checksum(arrays: Iterable[np.ndarray]) -> str:
    """SHA-256 over the shapes, dtypes and bytes of an ordered array sequence."""
    digest = hashlib.sha256()
    for array in arrays:
        array = np.ascontiguousarray(array)
        digest.update(str(array.shape).encode('utf8'))
        digest.update(array.dtype.str.encode('utf8'))
        digest.update(array.tobytes())
    return digest.hexdigest()


def parallel_map(function: Callable, items: Sequence, workers: int) -> list:
    """Apply ``function`` to every item, results in input order.

    :param function: a picklable callable
    :param items: inputs
    :param workers: number of processes. ``1`` runs in the current process
    :return: the outputs, one per item, in the same order
    """
    if workers == 1 or len(items) < 2:
        return [function(item) for item in items]
    return Parallel(n_jobs=workers)(delayed(function)(item) for item in items)
