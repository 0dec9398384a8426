#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Procedural image dataset and train/eval splits.

Each image is a textured gradient background with 2 to 5 textured,
colored shapes on top. Shapes carry the contours a machine codec keeps,
the band-limited noise carries the texture it discards.
A directory of real images can replace the generator.
"""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import json
import logging
import math
import os
from typing import Any, Dict, List, Tuple

import click
import numpy as np
from PIL import Image, ImageDraw
from scipy.ndimage import gaussian_filter
from tqdm import tqdm

from guidedicm.commons import constants, imaging, keys, utils
from guidedicm.commons import localizations as loc
from guidedicm.commons.config import ExperimentConfig, config_options, load_config

LOGGER = logging.getLogger(__name__)

IMAGE_EXTENSIONS = ('.png', '.jpg', '.jpeg', '.bmp', '.tif', '.tiff')
SOURCE_DIR = 'source_dir'


def band_limited_noise(rng: np.random.Generator, size: int) -> np.ndarray:
    """Zero-mean Gaussian-filtered noise plane with a random scale and amplitude."""
    sigma = rng.uniform(*constants.TEXTURE_SIGMA)
    amplitude = rng.uniform(*constants.TEXTURE_AMPLITUDE)
    noise = gaussian_filter(rng.standard_normal((size, size)), sigma)
    noise -= noise.mean()
    return amplitude * noise / (noise.std() + 1e-12)


def _gradient(rng: np.random.Generator, size: int) -> np.ndarray:
    start, end = rng.uniform(0.0, 1.0, size=(2, 3))
    angle = rng.uniform(0.0, 2.0 * math.pi)
    rows, columns = np.mgrid[0:size, 0:size] / max(size - 1, 1)
    ramp = math.cos(angle) * columns + math.sin(angle) * rows
    ramp = (ramp - ramp.min()) / (np.ptp(ramp) + 1e-12)
    return start + ramp[..., None] * (end - start)


def _shape_mask(rng: np.random.Generator, kind: str, size: int) -> np.ndarray:
    mask = Image.new('L', (size, size), 0)
    draw = ImageDraw.Draw(mask)
    cx, cy = rng.uniform(0.15, 0.85, size=2) * size
    rx, ry = rng.uniform(0.08, 0.3, size=2) * size

    if kind == 'ellipse':
        draw.ellipse([cx - rx, cy - ry, cx + rx, cy + ry], fill=255)
    elif kind == 'rectangle':
        draw.rectangle([cx - rx, cy - ry, cx + rx, cy + ry], fill=255)
    else:
        phase = rng.uniform(0.0, 2.0 * math.pi)
        angles = phase + np.arange(3) * 2.0 * math.pi / 3.0
        vertices = list(zip(cx + rx * np.cos(angles), cy + ry * np.sin(angles)))
        draw.polygon(vertices, fill=255)

    return np.asarray(mask) > 127


def procedural_image(rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw one image in ``[0, 1]`` of shape ``(size, size, 3)``."""
    image = _gradient(rng, size) + band_limited_noise(rng, size)[..., None]

    for _ in range(rng.integers(constants.MIN_SHAPES, constants.MAX_SHAPES + 1)):
        kind = constants.SHAPES[rng.integers(len(constants.SHAPES))]
        mask = _shape_mask(rng, kind, size)
        color = rng.uniform(0.1, 0.9, size=3)
        fill = color + band_limited_noise(rng, size)[..., None]
        image = np.where(mask[..., None], fill, image)

    return np.clip(image, 0.0, 1.0)


def gen_procedural_dataset(
    count: int, seed: int, out_dir: str, image_size: int = 64
) -> Dict[str, Any]:
    """Generate ``count`` images and their manifest.

    Image ``i`` depends only on ``(seed, i)``.

    :param count: number of images, at least 1
    :param seed: generator seed
    :param out_dir: output folder, created if needed
    :param image_size: side of the square images
    :return: the manifest, also written as ``manifest.json`` in ``out_dir``
    :raises ValueError: if ``count`` < 1
    :raises OSError: if ``out_dir`` is not writable
    """
    if count < 1:
        err_msg = loc.BAD_CONFIG_VALUE % ('count', count, 'Expected an integer >= 1.')
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)
    if image_size < constants.MIN_IMAGE_SIDE:
        err_msg = loc.IMAGE_TOO_SMALL % (
            constants.MIN_IMAGE_SIDE,
            image_size,
            image_size,
        )
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)

    os.makedirs(out_dir, exist_ok=True)
    filenames = []
    for index in tqdm(range(count), desc='Generating images'):
        filename = constants.IMAGE_FILENAME.format(index)
        image = procedural_image(utils.image_rng(seed, index), image_size)
        imaging.save_image(image, os.path.join(out_dir, filename))
        filenames.append(filename)

    manifest = {keys.FILENAMES: filenames, keys.SEED: seed, keys.COUNT: count}
    _write_manifest(manifest, os.path.join(out_dir, constants.MANIFEST_FILENAME))
    LOGGER.info("Generated %d images with seed %d in '%s'", count, seed, out_dir)
    return manifest


def _write_manifest(manifest: Dict[str, Any], path: str) -> None:
    with open(path, 'w') as fout:
        json.dump(manifest, fout, indent=2)


def list_source_images(source_dir: str) -> List[str]:
    """Image files directly inside ``source_dir``, sorted by name."""
    if not os.path.isdir(source_dir):
        err_msg = loc.MISSING_PATH % source_dir
        LOGGER.critical(err_msg)
        raise FileNotFoundError(err_msg)
    return sorted(
        name
        for name in os.listdir(source_dir)
        if name.lower().endswith(IMAGE_EXTENSIONS)
    )


def split(
    filenames: List[str], train_count: int, eval_count: int, split_seed: int
) -> Tuple[List[str], List[str]]:
    """Deterministic disjoint train and eval subsets.

    :raises ValueError: if there are fewer files than requested
    """
    needed = train_count + eval_count
    if len(filenames) < needed:
        err_msg = loc.FEW_SAMPLES % (needed, len(filenames))
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)

    order = np.random.default_rng(split_seed).permutation(len(filenames))
    chosen = [filenames[i] for i in order[:needed]]
    return chosen[:train_count], chosen[train_count:]


def prepare_dataset(cfg: ExperimentConfig) -> Dict[str, Any]:
    """Generate or ingest the dataset and write the split manifest.

    :param cfg: experiment config
    :return: the manifest with ``train`` and ``eval`` file lists
    """
    dataset = cfg.dataset
    data_folder = cfg.path(constants.DATA_FOLDER)

    if dataset.source_dir is None:
        manifest = gen_procedural_dataset(
            dataset.train_count + dataset.eval_count,
            dataset.generator_seed,
            data_folder,
            dataset.image_size,
        )
        root = None
    else:
        os.makedirs(data_folder, exist_ok=True)
        root = os.path.abspath(dataset.source_dir)
        filenames = list_source_images(root)
        manifest = {keys.FILENAMES: filenames, keys.COUNT: len(filenames)}
        LOGGER.info("Found %d images in '%s'", len(filenames), root)

    train, test = split(
        manifest[keys.FILENAMES],
        dataset.train_count,
        dataset.eval_count,
        dataset.split_seed,
    )
    manifest.update({keys.TRAIN: train, keys.TEST: test, SOURCE_DIR: root})
    _write_manifest(manifest, cfg.path(constants.MANIFEST))
    return manifest


def read_manifest(cfg: ExperimentConfig) -> Dict[str, Any]:
    path = cfg.path(constants.MANIFEST)
    if not os.path.isfile(path):
        err_msg = loc.MISSING_PATH % path
        LOGGER.critical(err_msg)
        raise FileNotFoundError(err_msg)
    with open(path) as fin:
        return json.load(fin)


def load_split(cfg: ExperimentConfig, which: str) -> Tuple[List[str], List[np.ndarray]]:
    """Load one split of the prepared dataset.

    :param cfg: experiment config
    :param which: ``train`` or ``eval``
    :return: file names and RGB images, in manifest order
    :raises FileNotFoundError: if the dataset was not prepared or an image is missing
    :raises ValueError: if the split is empty
    """
    manifest = read_manifest(cfg)
    filenames = manifest.get(which) or []
    if not filenames:
        err_msg = loc.EMPTY_DATASET % which
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)

    root = manifest.get(SOURCE_DIR) or cfg.path(constants.DATA_FOLDER)
    images = [imaging.load_image(os.path.join(root, name)) for name in filenames]
    LOGGER.info('Loaded %d %s images', len(images), which)
    return filenames, images


@click.command(name='gen-data')
@config_options
def gen_data_cli(config, profile, workdir):
    """Generate or ingest the dataset and split it into train and eval."""
    cfg = load_config(config, profile, workdir)
    manifest = prepare_dataset(cfg)
    LOGGER.info(
        'Dataset ready: %d train and %d eval images',
        len(manifest[keys.TRAIN]),
        len(manifest[keys.TEST]),
    )
