#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""HDF5 checkpoint containers for the diffusion base model and the control branch.

A checkpoint holds ordered parameter tensors, their exponential moving
average, the optimizer slots, and a metadata record
with the model kind, architecture, schedule, training step,
numpy RNG state, resolved config and, for control branches,
the checksum of the base they were trained on.
"""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import h5py
import numpy as np

from guidedicm.commons import keys
from guidedicm.commons import localizations as loc
from guidedicm.commons.exceptions import CheckpointMismatchError

LOGGER = logging.getLogger(__name__)

PARAMS_GROUP = 'params'
EMA_GROUP = 'ema'
OPTIMIZER_GROUP = 'optimizer'
LOSSES_DATASET = 'losses'


@dataclass
class Checkpoint:
    kind: str
    params: List[np.ndarray]
    architecture: Dict[str, Any]
    schedule: Dict[str, Any]
    step: int = 0
    ema: Optional[List[np.ndarray]] = None
    optimizer: Optional[List[np.ndarray]] = None
    rng_state: Optional[Dict[str, Any]] = None
    config: Optional[Dict[str, Any]] = None
    base_checksum: Optional[str] = None
    losses: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _write_arrays(h5file: h5py.File, name: str, arrays: Optional[List[np.ndarray]]):
    if arrays is None:
        return
    group = h5file.create_group(name)
    group.attrs[keys.COUNT] = len(arrays)
    for index, array in enumerate(arrays):
        group.create_dataset(f'{index:04d}', data=np.asarray(array))


def _read_arrays(h5file: h5py.File, name: str) -> Optional[List[np.ndarray]]:
    if name not in h5file:
        return None
    group = h5file[name]
    return [group[f'{index:04d}'][()] for index in range(int(group.attrs[keys.COUNT]))]


def save_checkpoint(checkpoint: Checkpoint, path: str) -> None:
    """Write a checkpoint. The file is replaced only once fully written.

    :param checkpoint: what to store
    :param path: output ``.h5`` file
    :raises OSError: if the file cannot be written
    """
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    partial = f'{path}.partial'

    try:
        with h5py.File(partial, 'w') as fout:
            fout.attrs[keys.KIND] = checkpoint.kind
            fout.attrs[keys.STEP] = checkpoint.step
            fout.attrs[keys.ARCHITECTURE] = json.dumps(checkpoint.architecture)
            fout.attrs[keys.SCHEDULE] = json.dumps(checkpoint.schedule)
            fout.attrs[keys.CONFIG] = json.dumps(checkpoint.config)
            fout.attrs[keys.RNG_STATE] = json.dumps(checkpoint.rng_state)
            fout.attrs[keys.BASE_CHECKSUM] = checkpoint.base_checksum or ''
            fout.attrs[keys.EMA] = checkpoint.ema is not None

            _write_arrays(fout, PARAMS_GROUP, checkpoint.params)
            _write_arrays(fout, EMA_GROUP, checkpoint.ema)
            _write_arrays(fout, OPTIMIZER_GROUP, checkpoint.optimizer)
            fout.create_dataset(
                LOSSES_DATASET, data=np.asarray(checkpoint.losses, dtype=np.float64)
            )
        os.replace(partial, path)
    except OSError as error:
        LOGGER.error("Cannot write checkpoint to '%s'. Reason: %s", path, error)
        raise

    LOGGER.info(
        "%s checkpoint at step %d saved to '%s'",
        checkpoint.kind.capitalize(),
        checkpoint.step,
        path,
    )


def load_checkpoint(path: str, kind: Optional[str] = None) -> Checkpoint:
    """Read a checkpoint written by :func:`save_checkpoint`.

    :param path: ``.h5`` file
    :param kind: expected model kind, ``base`` or ``control``
    :return: the checkpoint
    :raises FileNotFoundError: if the file does not exist
    :raises CheckpointMismatchError: if the file holds another kind of model
    """
    if not os.path.isfile(path):
        err_msg = loc.MISSING_PATH % path
        LOGGER.error(err_msg)
        raise FileNotFoundError(err_msg)

    with h5py.File(path, 'r') as fin:
        attrs = fin.attrs
        checkpoint = Checkpoint(
            kind=str(attrs[keys.KIND]),
            params=_read_arrays(fin, PARAMS_GROUP),
            architecture=json.loads(attrs[keys.ARCHITECTURE]),
            schedule=json.loads(attrs[keys.SCHEDULE]),
            step=int(attrs[keys.STEP]),
            ema=_read_arrays(fin, EMA_GROUP),
            optimizer=_read_arrays(fin, OPTIMIZER_GROUP),
            rng_state=json.loads(attrs[keys.RNG_STATE]),
            config=json.loads(attrs[keys.CONFIG]),
            base_checksum=str(attrs[keys.BASE_CHECKSUM]) or None,
            losses=fin[LOSSES_DATASET][()],
        )

    if kind is not None and checkpoint.kind != kind:
        err_msg = loc.WRONG_CHECKPOINT_KIND % (path, checkpoint.kind, kind)
        LOGGER.critical(err_msg)
        raise CheckpointMismatchError(err_msg)

    LOGGER.debug(
        "Loaded %s checkpoint from '%s' at step %d", checkpoint.kind, path, checkpoint.step
    )
    return checkpoint
