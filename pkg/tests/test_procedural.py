"""Procedural dataset generation, ingestion and splits."""

import json
import os

import numpy as np
import pytest

from guidedicm.commons import constants, imaging
from guidedicm.commons.config import config_from_dict
from guidedicm.dataset import procedural
from tests.conftest import tiny_document


def folder_bytes(folder):
    return {
        name: open(os.path.join(folder, name), 'rb').read()
        for name in sorted(os.listdir(folder))
    }


class TestGenerator:
    def test_same_seed_same_files(self, tmp_path):
        procedural.gen_procedural_dataset(3, 5, str(tmp_path / 'a'), 32)
        procedural.gen_procedural_dataset(3, 5, str(tmp_path / 'b'), 32)
        assert folder_bytes(tmp_path / 'a') == folder_bytes(tmp_path / 'b')

    def test_other_seed_other_images(self, tmp_path):
        procedural.gen_procedural_dataset(1, 5, str(tmp_path / 'a'), 32)
        procedural.gen_procedural_dataset(1, 6, str(tmp_path / 'b'), 32)
        name = constants.IMAGE_FILENAME.format(0)
        assert not np.array_equal(
            imaging.load_image(str(tmp_path / 'a' / name)),
            imaging.load_image(str(tmp_path / 'b' / name)),
        )

    def test_single_image(self, tmp_path):
        manifest = procedural.gen_procedural_dataset(1, 0, str(tmp_path), 32)
        assert sorted(os.listdir(tmp_path)) == sorted(
            [constants.IMAGE_FILENAME.format(0), constants.MANIFEST_FILENAME]
        )
        assert manifest['count'] == 1
        with open(tmp_path / constants.MANIFEST_FILENAME) as fin:
            assert json.load(fin) == manifest

    def test_images_are_in_range_and_textured(self, tmp_path):
        image = procedural.procedural_image(np.random.default_rng(0), 32)
        assert image.shape == (32, 32, 3)
        assert image.min() >= 0.0 and image.max() <= 1.0
        assert image.std() > 0.01

    def test_zero_count(self, tmp_path):
        with pytest.raises(ValueError):
            procedural.gen_procedural_dataset(0, 0, str(tmp_path), 32)


class TestSplit:
    def test_disjoint_and_deterministic(self):
        names = [f'{index}.png' for index in range(20)]
        train, test = procedural.split(names, 12, 5, 42)
        assert len(train) == 12 and len(test) == 5
        assert not set(train) & set(test)
        assert (train, test) == procedural.split(names, 12, 5, 42)

    def test_too_few_files(self):
        with pytest.raises(ValueError):
            procedural.split(['a.png'], 1, 1, 0)


class TestPrepareDataset:
    def test_generated(self, tiny_cfg):
        manifest = procedural.prepare_dataset(tiny_cfg)
        assert len(manifest['train']) == 4 and len(manifest['eval']) == 4
        names, images = procedural.load_split(tiny_cfg, 'eval')
        assert names == manifest['eval']
        assert all(image.shape == (32, 32, 3) for image in images)

    def test_source_dir(self, tmp_path, rng):
        source = tmp_path / 'photos'
        for index in range(9):
            imaging.save_image(rng.uniform(size=(20, 24, 3)), str(source / f'{index}.png'))
        (source / 'notes.txt').write_text('ignored')
        cfg = config_from_dict(
            tiny_document(tmp_path / 'work', dataset={'source_dir': str(source)})
        )
        manifest = procedural.prepare_dataset(cfg)
        assert manifest['count'] == 9
        _, images = procedural.load_split(cfg, 'train')
        assert len(images) == 4
        assert images[0].shape == (20, 24, 3)

    def test_missing_manifest(self, tiny_cfg):
        with pytest.raises(FileNotFoundError):
            procedural.load_split(tiny_cfg, 'train')
