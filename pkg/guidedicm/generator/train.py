#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Two-stage training.

Stage 1 trains the noise predictor unconditionally.
Stage 2 freezes it, encodes every training image with the machine codec,
and trains a control branch on ``(original, machine decode)`` pairs.
Checkpoints carry everything needed to resume with the identical
loss sequence: weights, their moving average, optimizer slots,
the step counter and the numpy RNG state.
"""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import logging
import os
from typing import Callable, List, Optional, Sequence, Tuple

import click
import keras
import numpy as np
import tensorflow as tf
from tqdm import trange

from guidedicm.codec import machine
from guidedicm.commons import checkpoints, constants, imaging, keys, utils
from guidedicm.commons import localizations as loc
from guidedicm.commons.checkpoints import Checkpoint
from guidedicm.commons.config import (
    ExperimentConfig,
    config_options,
    config_to_dict,
    dump_config,
    load_config,
)
from guidedicm.dataset import procedural
from guidedicm.commons.exceptions import CheckpointMismatchError
from guidedicm.generator import control, diffusion
from guidedicm.generator.networks import (
    Architecture,
    NoisePredictor,
    build_noise_predictor,
    set_parameters,
)

LOGGER = logging.getLogger(__name__)


def architecture_from_config(cfg: ExperimentConfig) -> Architecture:
    return Architecture(**cfg.diffusion.architecture_params())


def base_checksum(checkpoint: Checkpoint) -> str:
    """Checksum of the weights a base checkpoint samples with."""
    return utils.checksum(
        checkpoint.ema if checkpoint.ema is not None else checkpoint.params
    )


def load_base(checkpoint: Checkpoint) -> NoisePredictor:
    """Rebuild a frozen noise predictor with its moving-average weights."""
    arch = Architecture.from_dict(checkpoint.architecture)
    model = build_noise_predictor(arch, seed=0)
    set_parameters(
        model, checkpoint.ema if checkpoint.ema is not None else checkpoint.params
    )
    model.trainable = False
    return model


def load_control(
    control_checkpoint: Checkpoint,
    base_model: NoisePredictor,
    base_checkpoint: Checkpoint,
    control_path: str = '<control>',
    base_path: str = '<base>',
) -> control.ControlBranch:
    """Rebuild a control branch, checking it was trained on this base.

    :raises CheckpointMismatchError: if the recorded base checksum differs
    """
    expected = base_checksum(base_checkpoint)
    if control_checkpoint.base_checksum != expected:
        err_msg = loc.CHECKSUM_MISMATCH % (
            control_path,
            control_checkpoint.base_checksum,
            base_path,
            expected,
        )
        LOGGER.critical(err_msg)
        raise CheckpointMismatchError(err_msg)

    branch = control.init_control_branch(base_model, seed=0)
    set_parameters(
        branch,
        control_checkpoint.ema
        if control_checkpoint.ema is not None
        else control_checkpoint.params,
    )
    return branch


def make_optimizer(cfg: ExperimentConfig) -> keras.optimizers.Optimizer:
    return keras.optimizers.Adam(
        learning_rate=cfg.diffusion.learning_rate,
        global_clipnorm=cfg.diffusion.global_clipnorm,
    )


def moving_average(losses: List[float], window: int) -> float:
    if not losses:
        return float('nan')
    return float(np.mean(losses[-window:]))


def _check_not_empty(images: Sequence[np.ndarray], kind: str) -> None:
    if len(images) == 0:
        err_msg = loc.EMPTY_DATASET % kind
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)


def _prepare_images(images: Sequence[np.ndarray], image_size: int) -> np.ndarray:
    resized = [
        image
        if image.shape[:2] == (image_size, image_size)
        else imaging.resize_bilinear(image, image_size, image_size)
        for image in images
    ]
    return diffusion.to_model_range(np.stack(resized))


def _fit(
    kind: str,
    trainable: keras.Model,
    predict: Callable,
    data: np.ndarray,
    conditions: Optional[np.ndarray],
    cfg: ExperimentConfig,
    total_steps: int,
    out_path: str,
    resume_from: Optional[Checkpoint],
    base_sum: Optional[str] = None,
) -> Checkpoint:
    """Shared optimization loop of both stages."""
    diffusion_cfg = cfg.diffusion
    schedule = diffusion.make_schedule(**diffusion_cfg.schedule_params())
    dtype = trainable.architecture.dtype
    variables = trainable.trainable_variables
    optimizer = make_optimizer(cfg)
    optimizer.build(variables)
    rng = np.random.default_rng(diffusion_cfg.seed)
    ema = [np.array(weight) for weight in trainable.get_weights()]
    losses: List[float] = []
    start = 0

    if resume_from is not None:
        set_parameters(trainable, resume_from.params)
        ema = list(resume_from.ema)
        for variable, value in zip(optimizer.variables, resume_from.optimizer):
            variable.assign(value)
        rng.bit_generator.state = resume_from.rng_state
        losses = list(resume_from.losses)
        start = resume_from.step
        LOGGER.info('Resuming %s training from step %d', kind, start)

    @tf.function
    def train_step(z_t, t, eps, condition):
        with tf.GradientTape() as tape:
            loss = diffusion.noise_prediction_error(eps, predict(z_t, t, condition))
        gradients = tape.gradient(loss, variables)
        optimizer.apply_gradients(zip(gradients, variables))
        return loss

    def snapshot(step: int) -> Checkpoint:
        return Checkpoint(
            kind=kind,
            params=trainable.get_weights(),
            architecture=trainable.architecture.to_dict(),
            schedule=diffusion_cfg.schedule_params(),
            step=step,
            ema=ema,
            optimizer=[np.array(variable) for variable in optimizer.variables],
            rng_state=rng.bit_generator.state,
            config=config_to_dict(cfg),
            base_checksum=base_sum,
            losses=np.asarray(losses),
        )

    decay = diffusion_cfg.ema_decay
    for step in trange(
        start, total_steps, desc=f'{kind} training', initial=start, total=total_steps
    ):
        indices = rng.integers(0, len(data), size=diffusion_cfg.batch_size)
        z0 = data[indices]
        t, eps = diffusion.draw_noise(rng, z0.shape, schedule)
        z_t = diffusion.forward_noise(z0, t, eps, schedule)
        condition = (
            None if conditions is None else conditions[indices].astype(dtype)
        )

        loss = float(
            train_step(
                z_t.astype(dtype), t.astype(np.int32), eps.astype(dtype), condition
            )
        )
        if not np.isfinite(loss):
            LOGGER.critical(
                'Loss diverged at step %d. Last moving average: %f',
                step,
                moving_average(losses, constants.LOSS_MOVING_AVERAGE_WINDOW),
            )
            diffusion.check_finite(loss, f'{kind} training loss', step)
        losses.append(loss)

        ema = [
            decay * average + (1.0 - decay) * weight
            for average, weight in zip(ema, trainable.get_weights())
        ]

        done = step + 1
        if done % constants.LOSS_LOG_EVERY == 0:
            LOGGER.info(
                '%s step %d: loss moving average %f',
                kind,
                done,
                moving_average(losses, constants.LOSS_MOVING_AVERAGE_WINDOW),
            )
        if done % constants.CHECKPOINT_EVERY == 0 and done < total_steps:
            checkpoints.save_checkpoint(snapshot(done), out_path)

    final = snapshot(total_steps)
    checkpoints.save_checkpoint(final, out_path)
    if losses:
        LOGGER.info(
            '%s training done: loss moving average went from %f to %f',
            kind,
            float(np.mean(losses[: constants.LOSS_MOVING_AVERAGE_WINDOW])),
            moving_average(losses, constants.LOSS_MOVING_AVERAGE_WINDOW),
        )
    return final


def train_base(
    cfg: ExperimentConfig,
    images: Sequence[np.ndarray],
    out_path: str,
    resume: bool = False,
    steps: Optional[int] = None,
) -> Checkpoint:
    """Stage 1: train the unconditioned noise predictor.

    :param cfg: experiment config
    :param images: training images in ``[0, 1]``, shape ``(n, h, w, 3)``
    :param out_path: checkpoint file
    :param resume: continue from ``out_path`` if it exists
    :param steps: optional override of ``diffusion.base_steps``
    :return: the final checkpoint
    """
    _check_not_empty(images, keys.BASE)
    arch = architecture_from_config(cfg)
    model = build_noise_predictor(arch, cfg.diffusion.seed)
    data = _prepare_images(images, arch.image_size)
    resume_from = _resume_checkpoint(out_path, keys.BASE, resume)

    def predict(z_t, t, condition):
        return model(z_t, t, training=True)

    return _fit(
        keys.BASE,
        model,
        predict,
        data,
        None,
        cfg,
        steps or cfg.diffusion.base_steps,
        out_path,
        resume_from,
    )


def train_control(
    base_checkpoint: Checkpoint,
    cfg: ExperimentConfig,
    originals: Sequence[np.ndarray],
    machine_decodes: Sequence[np.ndarray],
    out_path: str,
    resume: bool = False,
    steps: Optional[int] = None,
) -> Checkpoint:
    """Stage 2: train a control branch against the frozen base.

    :param base_checkpoint: the stage 1 checkpoint
    :param cfg: experiment config
    :param originals: training images in ``[0, 1]``
    :param machine_decodes: their machine decodes, same order
    :param out_path: checkpoint file
    :param resume: continue from ``out_path`` if it exists
    :param steps: optional override of ``diffusion.control_steps``
    :return: the final checkpoint, tagged with the base checksum
    :raises CheckpointMismatchError: if the base weights changed during training
    """
    _check_not_empty(originals, keys.CONTROL)
    base = load_base(base_checkpoint)
    expected = base_checksum(base_checkpoint)
    branch = control.init_control_branch(base, cfg.diffusion.seed)

    arch = base.architecture
    data = _prepare_images(originals, arch.image_size)
    conditions = control.prepare_condition(machine_decodes, arch.image_size)
    resume_from = _resume_checkpoint(out_path, keys.CONTROL, resume)
    if resume_from is not None and resume_from.base_checksum != expected:
        err_msg = loc.CHECKSUM_MISMATCH % (
            out_path,
            resume_from.base_checksum,
            '<base>',
            expected,
        )
        LOGGER.critical(err_msg)
        raise CheckpointMismatchError(err_msg)

    def predict(z_t, t, condition):
        residuals = branch(
            z_t, t, branch.encode_condition(condition), training=True
        )
        return base(z_t, t, control=residuals, training=False)

    final = _fit(
        keys.CONTROL,
        branch,
        predict,
        data,
        conditions,
        cfg,
        steps or cfg.diffusion.control_steps,
        out_path,
        resume_from,
        base_sum=expected,
    )

    after = utils.checksum(base.get_weights())
    if after != expected:
        err_msg = loc.BASE_MUTATED % (expected, after)
        LOGGER.critical(err_msg)
        raise CheckpointMismatchError(err_msg)
    return final


def _resume_checkpoint(path: str, kind: str, resume: bool) -> Optional[Checkpoint]:
    if not resume:
        return None
    if not os.path.isfile(path):
        LOGGER.warning("No checkpoint to resume at '%s', starting over", path)
        return None
    return checkpoints.load_checkpoint(path, kind)


def _machine_decode(args: Tuple[np.ndarray, machine.CodecConfig]) -> np.ndarray:
    image, codec_config = args
    return machine.decode_machine(machine.encode_machine(image, codec_config))


def machine_decodes(
    images: Sequence[np.ndarray], codec_config: machine.CodecConfig, workers: int
) -> List[np.ndarray]:
    """Encode and decode every image with the machine codec, in input order."""
    return utils.parallel_map(
        _machine_decode, [(image, codec_config) for image in images], workers
    )


def run_training(
    cfg: ExperimentConfig,
    resume: bool = False,
    stages: Tuple[str, ...] = (keys.BASE, keys.CONTROL),
    images: Optional[Sequence[np.ndarray]] = None,
) -> Tuple[str, str]:
    """Run both training stages and return the two checkpoint paths.

    :param cfg: experiment config
    :param resume: continue from existing checkpoints
    :param stages: which stages to run. A skipped base stage reads its checkpoint
    :param images: training images in ``[0, 1]``. Default: the prepared train split
    :return: ``(base checkpoint path, control checkpoint path)``
    """
    base_path = cfg.path(constants.BASE_CHECKPOINT)
    control_path = cfg.path(constants.CONTROL_CHECKPOINT)
    if images is None:
        _, images = procedural.load_split(cfg, keys.TRAIN)

    if keys.BASE in stages:
        LOGGER.info('Stage 1: training the base model on %d images', len(images))
        base_checkpoint = train_base(cfg, images, base_path, resume)
    else:
        base_checkpoint = checkpoints.load_checkpoint(base_path, keys.BASE)

    if keys.CONTROL in stages:
        LOGGER.info('Stage 2: machine-coding %d training images', len(images))
        decodes = machine_decodes(images, cfg.codec, cfg.eval.workers)
        train_control(base_checkpoint, cfg, images, decodes, control_path, resume)

    return base_path, control_path


@click.command(name='train-base')
@config_options
@click.option(
    '--resume', is_flag=True, help='Continue from the existing base checkpoint.'
)
@click.option(
    '--steps',
    type=click.IntRange(min=1),
    help='Override the number of training steps.',
)
def train_base_cli(config, profile, workdir, resume, steps):
    """Stage 1: train the unconditioned diffusion model on the train split."""
    cfg = load_config(config, profile, workdir)
    dump_config(cfg, cfg.path(constants.RESOLVED_CONFIG_FILENAME))
    _, images = procedural.load_split(cfg, keys.TRAIN)
    train_base(cfg, images, cfg.path(constants.BASE_CHECKPOINT), resume, steps)


@click.command(name='train-control')
@config_options
@click.option(
    '--base-ckpt',
    type=click.Path(dir_okay=False),
    help='Base checkpoint. Default: the one in the work folder.',
)
@click.option(
    '--resume', is_flag=True, help='Continue from the existing control checkpoint.'
)
@click.option(
    '--steps',
    type=click.IntRange(min=1),
    help='Override the number of training steps.',
)
def train_control_cli(config, profile, workdir, base_ckpt, resume, steps):
    """Stage 2: train the control branch on machine-decoded train images."""
    cfg = load_config(config, profile, workdir)
    base_checkpoint = checkpoints.load_checkpoint(
        base_ckpt or cfg.path(constants.BASE_CHECKPOINT), keys.BASE
    )
    _, images = procedural.load_split(cfg, keys.TRAIN)
    decodes = machine_decodes(images, cfg.codec, cfg.eval.workers)
    train_control(
        base_checkpoint,
        cfg,
        images,
        decodes,
        cfg.path(constants.CONTROL_CHECKPOINT),
        resume,
        steps,
    )
