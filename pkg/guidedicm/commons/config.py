#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Experiment configuration.

One YAML document governs a whole run. Each section maps to a frozen
dataclass. User values are merged over the selected profile,
which is merged over the package defaults.
Unknown keys and badly typed values fail fast with
:class:`~guidedicm.commons.exceptions.ConfigError`.
"""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pkgutil import get_data
from typing import Any, Dict, Optional, Tuple

import click
import yaml

from guidedicm.codec.machine import CodecConfig
from guidedicm.commons import constants, keys
from guidedicm.commons import localizations as loc
from guidedicm.commons.exceptions import ConfigError

LOGGER = logging.getLogger(__name__)

PROFILES_MODULE = 'guidedicm.commons.resources'
PROFILES = ('default', 'ci')


@dataclass(frozen=True)
class DatasetConfig:
    source_dir: Optional[str] = constants.DATASET_PARAMS['source_dir']
    image_size: int = constants.DATASET_PARAMS['image_size']
    train_count: int = constants.DATASET_PARAMS['train_count']
    eval_count: int = constants.DATASET_PARAMS['eval_count']
    split_seed: int = constants.DATASET_PARAMS['split_seed']
    generator_seed: int = constants.DATASET_PARAMS['generator_seed']


@dataclass(frozen=True)
class DiffusionConfig:
    image_size: int = constants.ARCHITECTURE_PARAMS['image_size']
    timesteps: int = constants.SCHEDULE_PARAMS['steps']
    beta_start: float = constants.SCHEDULE_PARAMS['beta_start']
    beta_end: float = constants.SCHEDULE_PARAMS['beta_end']
    base_channels: int = constants.ARCHITECTURE_PARAMS['base_channels']
    channel_multipliers: Tuple[int, ...] = constants.ARCHITECTURE_PARAMS[
        'channel_multipliers'
    ]
    num_res_blocks: int = constants.ARCHITECTURE_PARAMS['num_res_blocks']
    attention_resolutions: Tuple[int, ...] = constants.ARCHITECTURE_PARAMS[
        'attention_resolutions'
    ]
    norm_groups: int = constants.ARCHITECTURE_PARAMS['norm_groups']
    time_embedding_dim: int = constants.ARCHITECTURE_PARAMS['time_embedding_dim']
    learning_rate: float = constants.OPTIMIZER_PARAMS['learning_rate']
    batch_size: int = constants.OPTIMIZER_PARAMS['batch_size']
    global_clipnorm: float = constants.OPTIMIZER_PARAMS['global_clipnorm']
    ema_decay: float = constants.OPTIMIZER_PARAMS['ema_decay']
    base_steps: int = constants.TRAINING_STEPS[keys.BASE]
    control_steps: int = constants.TRAINING_STEPS[keys.CONTROL]
    seed: int = 0

    def architecture_params(self) -> Dict[str, Any]:
        return {
            name: getattr(self, name) for name in constants.ARCHITECTURE_PARAMS
        }

    def schedule_params(self) -> Dict[str, Any]:
        return {
            'steps': self.timesteps,
            'beta_start': self.beta_start,
            'beta_end': self.beta_end,
        }


@dataclass(frozen=True)
class SamplingConfig:
    sampler: str = constants.SAMPLING_PARAMS['sampler']
    steps: int = constants.SAMPLING_PARAMS['steps']
    seed: int = constants.SAMPLING_PARAMS['seed']
    cc: bool = constants.SAMPLING_PARAMS['cc']
    batch_size: int = constants.SAMPLING_PARAMS['batch_size']


@dataclass(frozen=True)
class EvalConfig:
    metrics: Tuple[str, ...] = constants.EVAL_PARAMS['metrics']
    embedder: str = constants.EVAL_PARAMS['embedder']
    workers: int = constants.EVAL_PARAMS['workers']
    mismatched_probe: bool = constants.EVAL_PARAMS['mismatched_probe']


@dataclass(frozen=True)
class ExperimentConfig:
    workdir: str = constants.WORK_FOLDER
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    codec: CodecConfig = field(default_factory=CodecConfig)
    diffusion: DiffusionConfig = field(default_factory=DiffusionConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def path(self, relative: str) -> str:
        """Resolve a path relative to the work folder."""
        return os.path.join(self.workdir, relative)


SECTIONS = {
    keys.DATASET: DatasetConfig,
    keys.CODEC: CodecConfig,
    keys.DIFFUSION: DiffusionConfig,
    keys.SAMPLING: SamplingConfig,
    keys.EVAL: EvalConfig,
}

# Values that must be integers >= 1
_COUNTS = {
    'train_count',
    'eval_count',
    'image_size',
    'timesteps',
    'base_channels',
    'num_res_blocks',
    'norm_groups',
    'time_embedding_dim',
    'batch_size',
    'steps',
    'workers',
}
_SEEDS = {'split_seed', 'generator_seed', 'seed'}


def _fail(name: str, value, reason: str):
    err_msg = loc.BAD_CONFIG_VALUE % (name, value, reason)
    LOGGER.critical(err_msg)
    raise ConfigError(err_msg)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _coerce(section: str, name: str, value, default):
    qualified = f'{section}.{name}'

    if name in _SEEDS:
        if not _is_int(value):
            _fail(qualified, value, 'Seeds must be explicit integers.')
        return value

    if name in _COUNTS:
        if not _is_int(value) or value < 1:
            _fail(qualified, value, 'Expected an integer >= 1.')
        return value

    if isinstance(default, bool):
        if not isinstance(value, bool):
            _fail(qualified, value, 'Expected true or false.')
        return value

    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            _fail(qualified, value, 'Expected a list.')
        return tuple(value)

    if isinstance(default, float):
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            _fail(qualified, value, 'Expected a number.')
        return float(value)

    if _is_int(default) and not _is_int(value):
        _fail(qualified, value, 'Expected an integer.')

    if isinstance(default, str) and not isinstance(value, str):
        _fail(qualified, value, 'Expected a string.')

    return value


def _build_section(name: str, values: Optional[Dict[str, Any]]):
    section_class = SECTIONS[name]
    values = values or {}
    if not isinstance(values, dict):
        _fail(name, values, 'Expected a mapping.')

    defaults = section_class()
    known = {f.name for f in fields(section_class)}
    unknown = sorted(set(values) - known)
    if unknown:
        err_msg = loc.UNKNOWN_CONFIG_KEY % (name, ', '.join(unknown))
        LOGGER.critical(err_msg)
        raise ConfigError(err_msg)

    coerced = {
        key: _coerce(name, key, value, getattr(defaults, key))
        for key, value in values.items()
        if not (key == 'source_dir' and value is None)
    }
    if coerced.get('source_dir') is not None and not isinstance(
        coerced['source_dir'], str
    ):
        _fail(f'{name}.source_dir', coerced['source_dir'], 'Expected a path.')

    # Codec and other sections validate themselves
    return section_class(**{**asdict(defaults), **coerced})


def _validate(cfg: ExperimentConfig) -> None:
    diffusion = cfg.diffusion
    if not (
        constants.MIN_DIFFUSION_IMAGE_SIZE
        <= diffusion.image_size
        <= constants.MAX_DIFFUSION_IMAGE_SIZE
    ):
        _fail(
            'diffusion.image_size',
            diffusion.image_size,
            f'Expected a value in [{constants.MIN_DIFFUSION_IMAGE_SIZE}, '
            f'{constants.MAX_DIFFUSION_IMAGE_SIZE}].',
        )
    downsampling = 2 ** (len(diffusion.channel_multipliers) - 1)
    if diffusion.image_size % downsampling:
        _fail(
            'diffusion.image_size',
            diffusion.image_size,
            f'Must be divisible by {downsampling}.',
        )
    if not 0 < diffusion.beta_start <= diffusion.beta_end < 1:
        _fail(
            'diffusion.beta_start',
            (diffusion.beta_start, diffusion.beta_end),
            'Expected 0 < beta_start <= beta_end < 1.',
        )
    if not 0 <= diffusion.ema_decay < 1:
        _fail('diffusion.ema_decay', diffusion.ema_decay, 'Expected [0, 1).')
    if diffusion.learning_rate <= 0 or diffusion.global_clipnorm <= 0:
        _fail(
            'diffusion.learning_rate',
            (diffusion.learning_rate, diffusion.global_clipnorm),
            'Learning rate and clip norm must be positive.',
        )
    if diffusion.base_channels % diffusion.norm_groups:
        _fail(
            'diffusion.norm_groups',
            diffusion.norm_groups,
            'base_channels must be divisible by norm_groups.',
        )

    sampling = cfg.sampling
    if sampling.sampler not in constants.SAMPLERS:
        _fail(
            'sampling.sampler',
            sampling.sampler,
            f'It should be one of {constants.SAMPLERS}.',
        )
    if sampling.steps > diffusion.timesteps:
        _fail(
            'sampling.steps',
            sampling.steps,
            f'Cannot exceed diffusion.timesteps = {diffusion.timesteps}.',
        )

    unknown_metrics = set(cfg.eval.metrics) - set(constants.CURVE_METRICS)
    if unknown_metrics or not cfg.eval.metrics:
        _fail(
            'eval.metrics',
            list(cfg.eval.metrics),
            f'Expected a non-empty subset of {constants.CURVE_METRICS}.',
        )
    set_level = [name for name in cfg.eval.metrics if name in constants.SET_METRICS]
    if set_level and cfg.dataset.eval_count < constants.MIN_SET_SAMPLES:
        _fail(
            'dataset.eval_count',
            cfg.dataset.eval_count,
            f'{", ".join(set_level)} need at least '
            f'{constants.MIN_SET_SAMPLES} eval images.',
        )
    if cfg.eval.embedder not in constants.EMBEDDERS:
        _fail(
            'eval.embedder',
            cfg.eval.embedder,
            f'It should be one of {tuple(constants.EMBEDDERS)}.',
        )

    source_dir = cfg.dataset.source_dir
    if source_dir is not None and not os.path.isdir(source_dir):
        err_msg = loc.MISSING_PATH % source_dir
        LOGGER.critical(err_msg)
        raise ConfigError(err_msg)


def config_from_dict(document: Optional[Dict[str, Any]]) -> ExperimentConfig:
    """Build a validated config from a parsed document.

    :param document: a mapping with a ``workdir`` key and one mapping per section
    :return: the config
    :raises ConfigError: on unknown keys or bad values
    """
    document = document or {}
    if not isinstance(document, dict):
        _fail('config', document, 'Expected a mapping at the top level.')

    unknown = sorted(set(document) - set(SECTIONS) - {keys.WORKDIR})
    if unknown:
        err_msg = loc.UNKNOWN_CONFIG_KEY % ('<top level>', ', '.join(unknown))
        LOGGER.critical(err_msg)
        raise ConfigError(err_msg)

    workdir = document.get(keys.WORKDIR, constants.WORK_FOLDER)
    if not isinstance(workdir, str):
        _fail(keys.WORKDIR, workdir, 'Expected a path.')

    sections = {
        name: _build_section(name, document.get(name)) for name in SECTIONS
    }
    cfg = ExperimentConfig(workdir=workdir, **sections)
    _validate(cfg)
    return cfg


def config_to_dict(cfg: ExperimentConfig) -> Dict[str, Any]:
    """Plain, YAML-friendly representation of a config."""

    def plain(value):
        if isinstance(value, tuple):
            return list(value)
        return value

    document = {keys.WORKDIR: cfg.workdir}
    for name in SECTIONS:
        document[name] = {
            key: plain(value) for key, value in asdict(getattr(cfg, name)).items()
        }
    return document


def load_profile(profile: str) -> Dict[str, Any]:
    if profile not in PROFILES:
        _fail('profile', profile, f'It should be one of {PROFILES}.')
    return yaml.safe_load(get_data(PROFILES_MODULE, f'{profile}.yaml')) or {}


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = value
    return merged


def load_config(
    path: Optional[str] = None,
    profile: str = 'default',
    workdir: Optional[str] = None,
) -> ExperimentConfig:
    """Load an experiment config.

    :param path: optional YAML file. Its values win over the profile
    :param profile: ``default`` or ``ci``
    :param workdir: optional override of the work folder
    :return: the validated config
    :raises ConfigError: on unknown keys, bad values or missing paths
    """
    document = load_profile(profile)

    if path is not None:
        if not os.path.isfile(path):
            err_msg = loc.MISSING_PATH % path
            LOGGER.critical(err_msg)
            raise ConfigError(err_msg)
        with open(path) as fin:
            try:
                user = yaml.safe_load(fin) or {}
            except yaml.YAMLError as error:
                raise ConfigError(f'Cannot parse {path}: {error}') from error
        if not isinstance(user, dict):
            _fail('config', user, 'Expected a mapping at the top level.')
        document = _merge(document, user)

    if workdir is not None:
        document[keys.WORKDIR] = workdir

    cfg = config_from_dict(document)
    LOGGER.info(
        "Loaded '%s' profile%s, work folder: '%s'",
        profile,
        f' with overrides from {path}' if path else '',
        cfg.workdir,
    )
    return cfg


def dump_config(cfg: ExperimentConfig, path: str) -> None:
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, 'w') as fout:
        yaml.safe_dump(config_to_dict(cfg), fout, sort_keys=False)
    LOGGER.debug('Resolved config dumped to %s', path)


def config_options(function):
    """Add ``--config``, ``--profile`` and ``--workdir`` to a click command."""
    function = click.option(
        '-w',
        '--workdir',
        type=click.Path(file_okay=False),
        help='Work folder, overrides the config value.',
    )(function)
    function = click.option(
        '-p',
        '--profile',
        type=click.Choice(PROFILES),
        default='default',
        show_default=True,
        help='Bundled defaults to start from.',
    )(function)
    return click.option(
        '-c',
        '--config',
        type=click.Path(dir_okay=False),
        help='YAML experiment config. Its values win over the profile.',
    )(function)
