"""Shared fixtures: small images, a tiny network and a fast config."""

import numpy as np
import pytest

from guidedicm.commons import checkpoints, constants
from guidedicm.commons.config import config_from_dict, load_profile
from guidedicm.dataset import procedural
from guidedicm.generator import control, train
from guidedicm.generator.networks import Architecture, build_noise_predictor

TINY_DIFFUSION = {
    'image_size': 32,
    'timesteps': 20,
    'base_channels': 8,
    'channel_multipliers': [1, 2],
    'num_res_blocks': 1,
    'attention_resolutions': [],
    'norm_groups': 4,
    'time_embedding_dim': 16,
    'batch_size': 2,
    'base_steps': 2,
    'control_steps': 2,
}


def tiny_document(workdir, **sections):
    document = load_profile('ci')
    document['workdir'] = str(workdir)
    document['diffusion'] = {**document['diffusion'], **TINY_DIFFUSION}
    document['sampling'] = {**document['sampling'], 'steps': 2, 'batch_size': 4}
    document['dataset'] = {
        **document['dataset'],
        'train_count': 4,
        'eval_count': 4,
    }
    document['eval'] = {**document.get('eval', {}), 'mismatched_probe': False}
    for name, values in sections.items():
        document[name] = {**document.get(name, {}), **values}
    return document


@pytest.fixture
def tiny_cfg(tmp_path):
    return config_from_dict(tiny_document(tmp_path / 'work'))


@pytest.fixture(scope='session')
def tiny_arch():
    return Architecture(
        image_size=32,
        base_channels=8,
        channel_multipliers=(1, 2),
        num_res_blocks=1,
        attention_resolutions=(),
        norm_groups=4,
        time_embedding_dim=16,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def step_image():
    """Gray 16x16 image: 8 black columns, then 8 white ones."""
    image = np.zeros((16, 16, 3))
    image[:, 8:] = 1.0
    return image


@pytest.fixture
def smooth_image():
    """32x32 RGB gradient with a bright disc, every value inside (0, 1)."""
    rows, columns = np.mgrid[0:32, 0:32] / 31.0
    disc = ((rows - 0.5) ** 2 + (columns - 0.5) ** 2 < 0.1).astype(float)
    image = np.stack(
        [0.2 + 0.6 * rows, 0.3 + 0.4 * columns, 0.25 + 0.5 * disc], axis=-1
    )
    return image


@pytest.fixture
def checkpoint_pair(tiny_cfg):
    """Untrained but matching base and control checkpoints plus a prepared dataset."""

    arch = train.architecture_from_config(tiny_cfg)
    schedule = tiny_cfg.diffusion.schedule_params()
    base = build_noise_predictor(arch, seed=0)
    base_checkpoint = checkpoints.Checkpoint(
        'base', base.get_weights(), arch.to_dict(), schedule
    )
    branch = control.init_control_branch(base, seed=1)
    control_checkpoint = checkpoints.Checkpoint(
        'control',
        branch.get_weights(),
        arch.to_dict(),
        schedule,
        base_checksum=train.base_checksum(base_checkpoint),
    )
    checkpoints.save_checkpoint(
        base_checkpoint, tiny_cfg.path(constants.BASE_CHECKPOINT)
    )
    checkpoints.save_checkpoint(
        control_checkpoint, tiny_cfg.path(constants.CONTROL_CHECKPOINT)
    )
    procedural.prepare_dataset(tiny_cfg)
    return tiny_cfg
