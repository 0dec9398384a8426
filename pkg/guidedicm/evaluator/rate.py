#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Rate points: CSV interchange, bitrate comparison tables and RD plots."""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import io
import logging
import math
import os
from dataclasses import asdict, dataclass
from pkgutil import get_data
from typing import Dict, List, Sequence

import click
import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from guidedicm.commons import constants, keys  # noqa: E402
from guidedicm.commons import localizations as loc  # noqa: E402
from guidedicm.commons.config import config_options, load_config  # noqa: E402
from guidedicm.commons.exceptions import RatePointError  # noqa: E402

LOGGER = logging.getLogger(__name__)

COLUMNS = [keys.CODEC_COLUMN, keys.METRIC_COLUMN, keys.BPP_COLUMN, keys.VALUE_COLUMN]
TOTAL_SUFFIX = '_total'
MARKERS = ('o', 's', '^', 'D', 'v', 'P', 'X', '*')


@dataclass(frozen=True)
class RatePoint:
    codec: str
    metric: str
    bpp: float
    value: float


def _fail(err_msg: str):
    LOGGER.critical(err_msg)
    raise RatePointError(err_msg)


def _parse_float(text: str, line: int, field: str) -> float:
    try:
        value = float(text)
    except ValueError:
        _fail(loc.MALFORMED_ROW % (line, f'{field} is not a number: {text!r}'))
    if not math.isfinite(value):
        _fail(loc.MALFORMED_ROW % (line, f'{field} is not finite: {text!r}'))
    return value


def _parse_table(table: pd.DataFrame, source: str) -> List[RatePoint]:
    if list(table.columns) != COLUMNS:
        _fail(loc.BAD_HEADER % (source, list(table.columns), COLUMNS))

    points = []
    # Line 1 is the header
    for line, row in zip(range(2, len(table) + 2), table.itertuples(index=False)):
        codec, metric, bpp, value = (str(cell).strip() for cell in row)
        if not codec:
            _fail(loc.MALFORMED_ROW % (line, 'empty codec label'))
        if metric not in constants.RATE_POINT_METRICS:
            _fail(loc.UNKNOWN_METRIC % (line, metric, constants.RATE_POINT_METRICS))
        bpp = _parse_float(bpp, line, keys.BPP_COLUMN)
        if bpp < 0:
            _fail(loc.MALFORMED_ROW % (line, f'negative bpp {bpp}'))
        points.append(
            RatePoint(codec, metric, bpp, _parse_float(value, line, keys.VALUE_COLUMN))
        )
    return points


def read_rd_table(buffer, source: str) -> List[RatePoint]:
    try:
        table = pd.read_csv(buffer, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        return []
    except pd.errors.ParserError as error:
        _fail(loc.MALFORMED_ROW % (0, f'{source}: {error}'))
    return _parse_table(table, source)


def import_rd_csv(path: str) -> List[RatePoint]:
    """Read rate points from a ``codec,metric,bpp,value`` CSV file.

    :param path: CSV file
    :return: the points in file order. An empty file gives an empty list
    :raises FileNotFoundError: if the file does not exist
    :raises RatePointError: on a bad header, a malformed row
      or an unknown metric, with the line number
    """
    if not os.path.isfile(path):
        err_msg = loc.MISSING_PATH % path
        LOGGER.critical(err_msg)
        raise FileNotFoundError(err_msg)

    points = read_rd_table(path, path)
    LOGGER.info("Imported %d rate points from '%s'", len(points), path)
    return points


def load_published_rates() -> List[RatePoint]:
    """Published bitrates at matched quality, bundled with the package."""
    data = get_data(constants.RESOURCES_MODULE, constants.PUBLISHED_RATES_FILENAME)
    return read_rd_table(
        io.StringIO(data.decode('utf8')), constants.PUBLISHED_RATES_FILENAME
    )


def points_to_frame(points: Sequence[RatePoint]) -> pd.DataFrame:
    return pd.DataFrame([asdict(point) for point in points], columns=COLUMNS)


def export_rd_csv(points: Sequence[RatePoint], path: str) -> None:
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    points_to_frame(points).to_csv(path, index=False)
    LOGGER.info("Exported %d rate points to '%s'", len(points), path)


def compare_bitrates(
    points: Sequence[RatePoint], reference_label: str
) -> pd.DataFrame:
    """Percentage bitrate difference of every point against the reference codec.

    ``delta = (bpp / bpp_reference - 1) * 100``, rounded to 2 decimals,
    computed per metric.

    :param points: rate points
    :param reference_label: codec every other one is compared against
    :return: one row per non-reference point with columns
      ``codec, metric, bpp, delta_percent``
    :raises RatePointError: if a metric has no or several reference points
    """
    references: Dict[str, List[RatePoint]] = {}
    for point in points:
        if point.codec == reference_label:
            references.setdefault(point.metric, []).append(point)

    rows = []
    for point in points:
        if point.codec == reference_label:
            continue
        candidates = references.get(point.metric, [])
        if not candidates:
            _fail(loc.MISSING_REFERENCE % (reference_label, point.metric))
        if len(candidates) > 1:
            _fail(
                loc.AMBIGUOUS_REFERENCE
                % (reference_label, len(candidates), point.metric)
            )
        reference = candidates[0]
        if reference.bpp == 0:
            _fail(
                loc.MALFORMED_ROW
                % (0, f'{reference_label} has 0 bpp on {point.metric}')
            )
        rows.append(
            {
                keys.CODEC_COLUMN: point.codec,
                keys.METRIC_COLUMN: point.metric,
                keys.BPP_COLUMN: point.bpp,
                keys.DELTA_COLUMN: round((point.bpp / reference.bpp - 1.0) * 100.0, 2),
            }
        )

    return pd.DataFrame(
        rows,
        columns=[
            keys.CODEC_COLUMN,
            keys.METRIC_COLUMN,
            keys.BPP_COLUMN,
            keys.DELTA_COLUMN,
        ],
    )


def metric_label(metric: str) -> str:
    """Axis label with the better direction, e.g. ``PSNR [dB] (↑)``."""
    label = metric.upper() + constants.METRIC_UNITS.get(metric, '')
    arrow = constants.METRIC_ARROWS.get(metric)
    return f'{label} ({arrow})' if arrow else label


def plot_rd(points: Sequence[RatePoint], metric: str, out_path: str) -> str:
    """Plot bpp against one metric, one series per codec label.

    Labels ending in ``_total`` get hollow markers, the others filled ones.

    :param points: rate points, any metrics
    :param metric: the metric to plot
    :param out_path: output image file. The format follows the extension
    :return: ``out_path``
    :raises RatePointError: if no point has this metric
    :raises OSError: if the file cannot be written
    """
    selected = [point for point in points if point.metric == metric]
    if not selected:
        _fail(loc.NO_POINTS % metric)

    series: Dict[str, List[RatePoint]] = {}
    for point in selected:
        series.setdefault(point.codec, []).append(point)

    figure, axis = plt.subplots(figsize=(6, 4.5))
    for index, (codec, codec_points) in enumerate(series.items()):
        codec_points = sorted(codec_points, key=lambda point: point.bpp)
        color = f'C{index % 10}'
        axis.plot(
            [point.bpp for point in codec_points],
            [point.value for point in codec_points],
            marker=MARKERS[index % len(MARKERS)],
            linestyle='-',
            color=color,
            markerfacecolor='none' if codec.endswith(TOTAL_SUFFIX) else color,
            label=codec,
        )

    axis.set_xlabel('bpp')
    axis.set_ylabel(metric_label(metric))
    axis.grid(True)
    axis.legend(fontsize=8)
    figure.tight_layout()

    folder = os.path.dirname(out_path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    try:
        figure.savefig(out_path, metadata={'Software': None})
    finally:
        plt.close(figure)

    LOGGER.info("RD plot of %s saved to '%s'", metric, out_path)
    return out_path


def plot_path(out_dir: str, metric: str) -> str:
    return os.path.join(out_dir, constants.PLOT_FILENAME.format(metric))


def plot_all(
    points: Sequence[RatePoint],
    out_dir: str,
    metrics: Sequence[str] = constants.CURVE_METRICS,
) -> List[str]:
    """One plot file per metric that has points."""
    present = {point.metric for point in points}
    return [
        plot_rd(points, metric, plot_path(out_dir, metric))
        for metric in metrics
        if metric in present
    ]


@click.command(name='import-rd')
@click.argument(
    'csv_files', nargs=-1, required=True, type=click.Path(dir_okay=False)
)
@config_options
def import_rd_cli(csv_files, config, profile, workdir):
    """Validate RD CSV_FILES and merge them into the work folder rate points."""
    cfg = load_config(config, profile, workdir)
    target = cfg.path(constants.RATE_POINTS)
    points = import_rd_csv(target) if os.path.isfile(target) else []
    for csv_file in csv_files:
        points.extend(import_rd_csv(csv_file))
    export_rd_csv(points, target)


@click.command(name='compare')
@click.argument('csv_files', nargs=-1, type=click.Path(dir_okay=False))
@config_options
@click.option(
    '-r',
    '--reference',
    default='TCM',
    show_default=True,
    help='Codec label every other codec is compared against.',
)
@click.option(
    '-o',
    '--out',
    type=click.Path(dir_okay=False),
    help='Output CSV for the comparison table. '
    'Default: the results folder under the work folder.',
)
def compare_cli(csv_files, config, profile, workdir, reference, out):
    """Percentage bitrate differences against a reference codec.

    Without CSV_FILES, compare the bundled published bitrates.
    """
    cfg = load_config(config, profile, workdir)
    out = out or cfg.path(constants.COMPARISON)

    points = []
    for csv_file in csv_files:
        points.extend(import_rd_csv(csv_file))
    if not csv_files:
        points = load_published_rates()

    table = compare_bitrates(points, reference)
    click.echo(table.to_string(index=False))
    folder = os.path.dirname(out)
    if folder:
        os.makedirs(folder, exist_ok=True)
    table.to_csv(out, index=False)
    LOGGER.info("Comparison table saved to '%s'", out)


@click.command(name='plot-rd')
@click.argument('csv_files', nargs=-1, type=click.Path(dir_okay=False))
@config_options
@click.option(
    '-m',
    '--metric',
    type=click.Choice(constants.RATE_POINT_METRICS),
    help='Plot one metric only. Default: every curve metric with points.',
)
@click.option(
    '-o',
    '--out-dir',
    type=click.Path(file_okay=False),
    help='Output folder. Default: the plots folder under the work folder.',
)
def plot_rd_cli(csv_files, config, profile, workdir, metric, out_dir):
    """Plot rate points from CSV_FILES, default: the work folder rate points."""
    cfg = load_config(config, profile, workdir)
    csv_files = csv_files or (cfg.path(constants.RATE_POINTS),)
    out_dir = out_dir or cfg.path(constants.PLOTS)

    points = []
    for csv_file in csv_files:
        points.extend(import_rd_csv(csv_file))

    if metric:
        plot_rd(points, metric, plot_path(out_dir, metric))
    else:
        plot_all(points, out_dir)

