#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Evaluation of machine and human decodes against the originals.

Every eval image is machine-coded once. The machine decode and both
human decodes, with and without the color controller, come from the
parsed bitstream alone, so the extension bitrate is zero by construction.
"""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import click
import numpy as np
import pandas as pd
import yaml
from tqdm import tqdm

from guidedicm.codec import machine
from guidedicm.commons import constants, imaging, keys, utils
from guidedicm.commons import localizations as loc
from guidedicm.commons.config import (
    ExperimentConfig,
    config_options,
    config_to_dict,
    load_config,
)
from guidedicm.commons.logging import log_dataframe_info
from guidedicm.dataset import procedural
from guidedicm.evaluator import embedders, metrics
from guidedicm.evaluator.rate import RatePoint, export_rd_csv
from guidedicm.generator import color, decode

LOGGER = logging.getLogger(__name__)

DECODE_KINDS = (keys.MACHINE_DECODE, keys.HUMAN_DECODE, keys.HUMAN_DECODE_CC)
IMAGE_COLUMN = 'image'
BYTES_COLUMN = 'bytes'
MACHINE_BPP = 'machine_bpp'
EXTENSION_BPP = 'extension_bpp'
TOTAL_BPP = 'total_bpp'
KID_STD_ERR = 'kid_std_err'
MATCHED_PROBE = 'matched_lpips'
MISMATCHED_PROBE = 'mismatched_lpips'
UNCONDITIONAL_PROBE = 'unconditional_lpips'

# Which decode each emitted codec label reports, and at which rate
LABEL_KINDS = {
    keys.MACHINE: keys.MACHINE_DECODE,
    keys.OURS: keys.HUMAN_DECODE,
    keys.OURS_CC: keys.HUMAN_DECODE_CC,
    keys.OURS_TOTAL: keys.HUMAN_DECODE,
    keys.OURS_CC_TOTAL: keys.HUMAN_DECODE_CC,
}


def metric_column(kind: str, metric: str) -> str:
    return f'{kind}_{metric}'


def check_rate_accounting(
    machine_bpp: float, extension_bpp: float, total_bpp: float
) -> None:
    """Zero extension rate, and total equal to machine plus extension.

    :raises ValueError: if the accounting does not hold exactly
    """
    if extension_bpp != 0.0 or total_bpp != machine_bpp + extension_bpp:
        err_msg = loc.BAD_CONFIG_VALUE % (
            'rate accounting',
            (machine_bpp, extension_bpp, total_bpp),
            'The human decode must use the machine bitstream only.',
        )
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)


def check_set_level_size(set_level: Sequence[str], images: int) -> None:
    """FID and KID need at least 2 eval images.

    :raises ValueError: if a set-level metric is requested on fewer images
    """
    if set_level and images < constants.MIN_SET_SAMPLES:
        err_msg = loc.SET_METRICS_TOO_FEW % (
            ', '.join(set_level),
            constants.MIN_SET_SAMPLES,
            images,
        )
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)


def write_human_decodes(
    folder: str, stems: Sequence[str], images: Sequence[np.ndarray]
) -> None:
    os.makedirs(folder, exist_ok=True)
    for stem, image in zip(stems, images):
        imaging.save_image(image, os.path.join(folder, stem + '.png'))
    LOGGER.info("%d human decodes written to '%s'", len(images), folder)


@dataclass
class EvalReport:
    """Per-image records, aggregates and rate accounting of one evaluation."""

    records: pd.DataFrame
    aggregates: Dict[str, Dict[str, float]]
    machine_bpp: float
    extension_bpp: float
    total_bpp: float
    probes: Dict[str, float] = field(default_factory=dict)
    config: Optional[Dict[str, Any]] = None
    cc: bool = True

    def __post_init__(self):
        check_rate_accounting(self.machine_bpp, self.extension_bpp, self.total_bpp)

    def rate_points(self, metric_names: Sequence[str]) -> List[RatePoint]:
        """One point per codec label and metric, extension rate for ``ours``.

        The color-controlled series are only emitted when ``cc`` is on.
        """
        rates = {
            keys.MACHINE: self.machine_bpp,
            keys.OURS: self.extension_bpp,
            keys.OURS_CC: self.extension_bpp,
            keys.OURS_TOTAL: self.total_bpp,
            keys.OURS_CC_TOTAL: self.total_bpp,
        }
        labels = {
            label: kind
            for label, kind in LABEL_KINDS.items()
            if self.cc or kind != keys.HUMAN_DECODE_CC
        }
        return [
            RatePoint(label, metric, rates[label], self.aggregates[kind][metric])
            for metric in metric_names
            for label, kind in labels.items()
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            MACHINE_BPP: self.machine_bpp,
            EXTENSION_BPP: self.extension_bpp,
            TOTAL_BPP: self.total_bpp,
            keys.CC: self.cc,
            'images': len(self.records),
            'aggregates': self.aggregates,
            'probes': self.probes,
            keys.CONFIG: self.config,
        }

    def save(self, report_path: str, records_path: str) -> None:
        for path in (report_path, records_path):
            folder = os.path.dirname(path)
            if folder:
                os.makedirs(folder, exist_ok=True)
        with open(report_path, 'w') as fout:
            yaml.safe_dump(self.to_dict(), fout, sort_keys=False)
        self.records.to_csv(records_path, index=False)
        LOGGER.info("Evaluation report saved to '%s'", report_path)


def _code_image(args: Tuple[np.ndarray, machine.CodecConfig]) -> bytes:
    image, codec_config = args
    return machine.encode_machine(image, codec_config).to_bytes()


def _per_image_metrics(
    original: np.ndarray,
    decoded: np.ndarray,
    names: Sequence[str],
    embedder: embedders.RandomConvEmbedder,
) -> Dict[str, float]:
    values = {}
    if keys.PSNR in names:
        values[keys.PSNR] = metrics.psnr(original, decoded)
    if keys.SSIM in names:
        values[keys.SSIM] = metrics.ssim(original, decoded)
    if keys.LPIPS in names:
        values[keys.LPIPS] = metrics.perceptual_distance(original, decoded, embedder)
    return values


def _mean_distance(
    originals: Sequence[np.ndarray],
    decoded: Sequence[np.ndarray],
    embedder: embedders.RandomConvEmbedder,
) -> float:
    return float(
        np.mean(
            [
                metrics.perceptual_distance(original, image, embedder)
                for original, image in zip(originals, decoded)
            ]
        )
    )


def run_eval(
    cfg: ExperimentConfig,
    base_path: Optional[str] = None,
    control_path: Optional[str] = None,
) -> EvalReport:
    """Evaluate a trained checkpoint pair on the eval split.

    :param cfg: experiment config
    :param base_path: base checkpoint. Default: the one in the work folder
    :param control_path: control checkpoint. Default: the one in the work folder
    :return: the report. Records, report and rate points are also written
      to the results folder
    :raises CheckpointMismatchError: if the checkpoints do not belong together
    :raises FileNotFoundError: if checkpoints or images are missing
    """
    base_path = base_path or cfg.path(constants.BASE_CHECKPOINT)
    control_path = control_path or cfg.path(constants.CONTROL_CHECKPOINT)
    names, originals = procedural.load_split(cfg, keys.TEST)
    set_level = [name for name in cfg.eval.metrics if name in constants.SET_METRICS]
    check_set_level_size(set_level, len(originals))
    decoder = decode.load_decoder(base_path, control_path)
    embedder = embedders.init_embedder(cfg.eval.embedder)
    sampling = cfg.sampling

    LOGGER.info('Machine-coding %d eval images', len(originals))
    payloads = utils.parallel_map(
        _code_image, [(image, cfg.codec) for image in originals], cfg.eval.workers
    )
    bitstream_folder = cfg.path(constants.BITSTREAMS_FOLDER)
    os.makedirs(bitstream_folder, exist_ok=True)
    stems = [os.path.splitext(os.path.basename(name))[0] for name in names]
    for stem, payload in zip(stems, payloads):
        with open(
            os.path.join(bitstream_folder, stem + constants.BITSTREAM_EXTENSION), 'wb'
        ) as fout:
            fout.write(payload)

    # Everything below reads the parsed bitstreams only
    bitstreams = [
        machine.MachineBitstream.from_bytes(payload) for payload in payloads
    ]
    machine_images = [machine.decode_machine(bitstream) for bitstream in bitstreams]
    seeds = [utils.derive_seed(sampling.seed, index) for index in range(len(names))]
    shapes = [image.shape[:2] for image in machine_images]

    LOGGER.info('Sampling %d human decodes with %s', len(seeds), sampling.sampler)
    generated = decode.generate(
        decoder,
        machine_images,
        seeds,
        sampling.sampler,
        sampling.steps,
        shapes,
        sampling.batch_size,
    )
    decodes = {
        keys.MACHINE_DECODE: machine_images,
        keys.HUMAN_DECODE: generated,
        keys.HUMAN_DECODE_CC: [
            color.apply_cc(image, machine_image)
            for image, machine_image in zip(generated, machine_images)
        ],
    }
    write_human_decodes(
        cfg.path(constants.HUMAN_DECODES),
        stems,
        [
            color.cc_enabled_pipeline(sampling.cc, image, machine_image)
            for image, machine_image in zip(generated, machine_images)
        ],
    )

    per_image = [
        name for name in cfg.eval.metrics if name in constants.PER_IMAGE_METRICS
    ]
    rows = []
    for index in tqdm(range(len(names)), desc='Per-image metrics'):
        bitstream = bitstreams[index]
        bpp = machine.rate_bpp(bitstream)
        row = {
            IMAGE_COLUMN: names[index],
            BYTES_COLUMN: bitstream.total_bytes,
            MACHINE_BPP: bpp,
            EXTENSION_BPP: 0.0,
            TOTAL_BPP: bpp + 0.0,
        }
        for kind in DECODE_KINDS:
            values = _per_image_metrics(
                originals[index], decodes[kind][index], per_image, embedder
            )
            row.update(
                {
                    metric_column(kind, metric): value
                    for metric, value in values.items()
                }
            )
        rows.append(row)
    records = pd.DataFrame(rows)
    log_dataframe_info(LOGGER, records, 'Per-image evaluation records')

    aggregates = {
        kind: {
            metric: float(records[metric_column(kind, metric)].mean())
            for metric in per_image
        }
        for kind in DECODE_KINDS
    }
    if set_level:
        reference = embedders.embed(originals, embedder)
        reference_fit = metrics.fit_gaussian(reference)
        for kind in DECODE_KINDS:
            embedding = embedders.embed(decodes[kind], embedder)
            if keys.FID in set_level:
                aggregates[kind][keys.FID] = metrics.fid(
                    metrics.fit_gaussian(embedding), reference_fit
                )
            if keys.KID in set_level:
                estimate = metrics.kid(embedding, reference)
                aggregates[kind][keys.KID] = estimate.mean
                aggregates[kind][KID_STD_ERR] = estimate.std_err

    probes = {}
    if cfg.eval.mismatched_probe:
        probes = conditioning_probes(
            decoder, originals, machine_images, generated, seeds, cfg, embedder
        )

    machine_bpp = float(records[MACHINE_BPP].mean())
    report = EvalReport(
        records=records,
        aggregates=aggregates,
        machine_bpp=machine_bpp,
        extension_bpp=0.0,
        total_bpp=machine_bpp + 0.0,
        probes=probes,
        config=config_to_dict(cfg),
        cc=sampling.cc,
    )
    report.save(cfg.path(constants.EVAL_REPORT), cfg.path(constants.EVAL_RECORDS))
    export_rd_csv(
        report.rate_points(cfg.eval.metrics), cfg.path(constants.RATE_POINTS)
    )
    return report


def conditioning_probes(
    decoder: decode.HumanDecoder,
    originals: Sequence[np.ndarray],
    machine_images: Sequence[np.ndarray],
    generated: Sequence[np.ndarray],
    seeds: Sequence[int],
    cfg: ExperimentConfig,
    embedder: embedders.RandomConvEmbedder,
) -> Dict[str, float]:
    """Mean perceptual distance to the originals of matched, shifted and no conditions.

    The shifted pairing conditions image ``i`` on the machine decode of image ``i + 1``.
    With a single image that pairing is the matched one, so it is left out.
    """
    sampling = cfg.sampling
    shapes = [image.shape[:2] for image in machine_images]
    run = dict(
        seeds=seeds,
        sampler=sampling.sampler,
        steps=sampling.steps,
        output_shapes=shapes,
        batch_size=sampling.batch_size,
    )
    unconditional = decode.generate(decoder, None, **run)
    probes = {
        MATCHED_PROBE: _mean_distance(originals, generated, embedder),
        UNCONDITIONAL_PROBE: _mean_distance(originals, unconditional, embedder),
    }
    if len(machine_images) < 2:
        LOGGER.warning(
            'Skipping the mismatched conditions probe: it needs at least 2 images, got %d',
            len(machine_images),
        )
    else:
        shifted = list(machine_images[1:]) + list(machine_images[:1])
        mismatched = decode.generate(decoder, shifted, **run)
        probes[MISMATCHED_PROBE] = _mean_distance(originals, mismatched, embedder)
    LOGGER.info('Conditioning probes: %s', probes)
    return probes


@click.command(name='eval')
@config_options
@click.option(
    '--base-ckpt',
    type=click.Path(dir_okay=False),
    help='Base checkpoint. Default: the one in the work folder.',
)
@click.option(
    '--control-ckpt',
    type=click.Path(dir_okay=False),
    help='Control checkpoint. Default: the one in the work folder.',
)
def eval_cli(config, profile, workdir, base_ckpt, control_ckpt):
    """Evaluate machine and human decodes of the eval split."""
    cfg = load_config(config, profile, workdir)
    report = run_eval(cfg, base_ckpt, control_ckpt)
    LOGGER.info(
        'Machine rate %.4f bpp, extension rate %.1f bpp, aggregates: %s',
        report.machine_bpp,
        report.extension_bpp,
        report.aggregates,
    )
