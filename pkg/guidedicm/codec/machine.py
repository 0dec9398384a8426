#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Contour and coarse-color codec for machine vision.

The bitstream keeps object contours as a binary Sobel edge map
plus a block-averaged, quantized color base, and drops every other texture.
Decoding renders the color base at full resolution
and darkens the luma of contour pixels.

Bitstream layout, big-endian:

========================  =======================================
field                     encoding
========================  =======================================
magic                     4 bytes, ``GMVB``
version                   unsigned byte
width, height             unsigned short each, unpadded size
edge threshold            32-bit float
color downsample          unsigned byte
quantization bits         unsigned byte
edge render weight        32-bit float
edge payload              unsigned int length, then bytes
color payload             unsigned int length, then bytes
========================  =======================================
"""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import logging
import os
import struct
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import ndimage

from guidedicm.commons import constants, imaging
from guidedicm.commons import localizations as loc
from guidedicm.commons.exceptions import BitstreamError, ConfigError
from guidedicm.codec import range_coder

LOGGER = logging.getLogger(__name__)

HEADER_SIZE = struct.calcsize(constants.BITSTREAM_HEADER_FORMAT)
LENGTH_SIZE = struct.calcsize(constants.PAYLOAD_LENGTH_FORMAT)


def _as_float32(value) -> float:
    return float(np.float32(value))


@dataclass(frozen=True)
class CodecConfig:
    """Machine codec parameters, echoed in every bitstream header.

    Real-valued fields are rounded to 32-bit floats at construction,
    so a config decoded from a header compares equal to the one used at encode.
    """

    edge_threshold: float = constants.CODEC_PARAMS['edge_threshold']
    color_downsample: int = constants.CODEC_PARAMS['color_downsample']
    quant_bits: int = constants.CODEC_PARAMS['quant_bits']
    edge_render_weight: float = constants.CODEC_PARAMS['edge_render_weight']

    def __post_init__(self):
        problems = []
        if not np.isfinite(self.edge_threshold) or self.edge_threshold <= 0:
            problems.append(
                f'edge_threshold must be positive, got {self.edge_threshold}'
            )
        if (
            not _is_int(self.color_downsample)
            or not constants.MIN_COLOR_DOWNSAMPLE
            <= self.color_downsample
            <= constants.MAX_COLOR_DOWNSAMPLE
        ):
            problems.append(
                f'color_downsample must be an integer in '
                f'[{constants.MIN_COLOR_DOWNSAMPLE}, {constants.MAX_COLOR_DOWNSAMPLE}], '
                f'got {self.color_downsample}'
            )
        if (
            not _is_int(self.quant_bits)
            or not constants.MIN_QUANT_BITS
            <= self.quant_bits
            <= constants.MAX_QUANT_BITS
        ):
            problems.append(
                f'quant_bits must be an integer in '
                f'[{constants.MIN_QUANT_BITS}, {constants.MAX_QUANT_BITS}], '
                f'got {self.quant_bits}'
            )
        if not 0.0 <= self.edge_render_weight <= 1.0:
            problems.append(
                f'edge_render_weight must be in [0, 1], got {self.edge_render_weight}'
            )

        if problems:
            err_msg = loc.BAD_CODEC_CONFIG % '; '.join(problems)
            LOGGER.critical(err_msg)
            raise ConfigError(err_msg)

        object.__setattr__(self, 'edge_threshold', _as_float32(self.edge_threshold))
        object.__setattr__(
            self, 'edge_render_weight', _as_float32(self.edge_render_weight)
        )

    @property
    def levels(self) -> int:
        return (1 << self.quant_bits) - 1

    @property
    def color_contexts(self) -> int:
        return 3 * self.quant_bits


def _is_int(value) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


@dataclass(frozen=True)
class MachineBitstream:
    """The single encoded artifact. Both decoding paths read only this."""

    width: int
    height: int
    config: CodecConfig
    edge_payload: bytes
    color_payload: bytes

    @property
    def total_bytes(self) -> int:
        return (
            HEADER_SIZE
            + 2 * LENGTH_SIZE
            + len(self.edge_payload)
            + len(self.color_payload)
        )

    def to_bytes(self) -> bytes:
        header = struct.pack(
            constants.BITSTREAM_HEADER_FORMAT,
            constants.BITSTREAM_MAGIC,
            constants.BITSTREAM_VERSION,
            self.width,
            self.height,
            self.config.edge_threshold,
            self.config.color_downsample,
            self.config.quant_bits,
            self.config.edge_render_weight,
        )
        return b''.join(
            (
                header,
                struct.pack(constants.PAYLOAD_LENGTH_FORMAT, len(self.edge_payload)),
                self.edge_payload,
                struct.pack(
                    constants.PAYLOAD_LENGTH_FORMAT, len(self.color_payload)
                ),
                self.color_payload,
            )
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> 'MachineBitstream':
        """Parse a serialized bitstream.

        :param data: the bitstream bytes
        :return: the parsed bitstream
        :raises BitstreamError: on a corrupt header, a payload underrun
          or trailing bytes
        """
        if len(data) < HEADER_SIZE:
            _bitstream_error(loc.HEADER_UNDERRUN % len(data))

        (
            magic,
            version,
            width,
            height,
            edge_threshold,
            color_downsample,
            quant_bits,
            edge_render_weight,
        ) = struct.unpack_from(constants.BITSTREAM_HEADER_FORMAT, data)

        if magic != constants.BITSTREAM_MAGIC:
            _bitstream_error(loc.BAD_MAGIC % magic)
        if version != constants.BITSTREAM_VERSION:
            _bitstream_error(loc.BAD_VERSION % version)
        if width < 1 or height < 1:
            _bitstream_error(loc.IMAGE_TOO_SMALL % (1, height, width))

        try:
            config = CodecConfig(
                edge_threshold, color_downsample, quant_bits, edge_render_weight
            )
        except ConfigError as error:
            raise BitstreamError(str(error)) from error

        offset = HEADER_SIZE
        edge_payload, offset = _read_payload(data, offset, 'edge payload')
        color_payload, offset = _read_payload(data, offset, 'color payload')
        if offset != len(data):
            _bitstream_error(loc.TRAILING_BYTES % (len(data) - offset))

        return cls(width, height, config, edge_payload, color_payload)


def _bitstream_error(err_msg: str):
    LOGGER.error(err_msg)
    raise BitstreamError(err_msg)


def _read_payload(data: bytes, offset: int, name: str) -> Tuple[bytes, int]:
    left = len(data) - offset
    if left < LENGTH_SIZE:
        _bitstream_error(loc.PAYLOAD_UNDERRUN % (name, LENGTH_SIZE, left))

    (length,) = struct.unpack_from(constants.PAYLOAD_LENGTH_FORMAT, data, offset)
    offset += LENGTH_SIZE
    left -= LENGTH_SIZE
    if left < length:
        _bitstream_error(loc.PAYLOAD_UNDERRUN % (name, length, left))

    return bytes(data[offset : offset + length]), offset + length


def compute_edge_map(img: np.ndarray, threshold: float) -> np.ndarray:
    """Mark contour pixels with a Sobel magnitude threshold on luma.

    Gradients use unnormalized 3x3 Sobel kernels with replicated borders.

    :param img: RGB image
    :param threshold: a pixel is a contour iff its gradient magnitude exceeds this
    :return: ``uint8`` map of shape ``(height, width)`` with values in ``{0, 1}``
    """
    if threshold <= 0:
        err_msg = f'Edge threshold must be positive, got {threshold}'
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)

    y = imaging.luma(img)
    gx = ndimage.sobel(y, axis=1, mode='nearest')
    gy = ndimage.sobel(y, axis=0, mode='nearest')

    return (np.hypot(gx, gy) > threshold).astype(np.uint8)


def edge_contexts(edges: np.ndarray) -> np.ndarray:
    """Context ids ``left + 2 * up + 4 * up_left`` in raster order.

    Neighbors outside the image count as non-edges.
    """
    padded = np.pad(edges.astype(np.int64), ((1, 0), (1, 0)))
    left = padded[1:, :-1]
    up = padded[:-1, 1:]
    up_left = padded[:-1, :-1]
    return (left + 2 * up + 4 * up_left).ravel()


def _decode_edges(payload: bytes, height: int, width: int) -> np.ndarray:
    # Contexts depend on already decoded pixels, so decode one pixel at a time
    decoder = range_coder.RangeDecoder(payload, constants.EDGE_CONTEXTS)
    edges = np.zeros((height + 1, width + 1), dtype=np.uint8)
    for row in range(1, height + 1):
        above = edges[row - 1]
        current = edges[row]
        for column in range(1, width + 1):
            context = (
                current[column - 1] + 2 * above[column] + 4 * above[column - 1]
            )
            current[column] = decoder.decode(int(context))
    return edges[1:, 1:]


def pad_replicate(img: np.ndarray, multiple: int) -> np.ndarray:
    """Replicate the bottom and right borders until both sides divide ``multiple``."""
    height, width = img.shape[:2]
    pad_rows = -height % multiple
    pad_columns = -width % multiple
    return np.pad(img, ((0, pad_rows), (0, pad_columns), (0, 0)), mode='edge')


def _color_layout(config: CodecConfig, block_rows: int, block_columns: int):
    shifts = np.arange(config.quant_bits - 1, -1, -1)
    contexts = np.tile(
        np.arange(config.color_contexts), block_rows * block_columns
    )
    return shifts, contexts


def _encode_color(img: np.ndarray, config: CodecConfig) -> bytes:
    k = config.color_downsample
    padded = pad_replicate(img, k)
    block_rows, block_columns = padded.shape[0] // k, padded.shape[1] // k

    blocks = padded.reshape(block_rows, k, block_columns, k, 3).mean(axis=(1, 3))
    quantized = np.clip(
        np.floor(blocks * config.levels + 0.5), 0, config.levels
    ).astype(np.int64)

    # Raster over blocks, then channels, then bits from the most significant
    shifts, contexts = _color_layout(config, block_rows, block_columns)
    bits = (quantized[..., None] >> shifts) & 1

    return range_coder.rc_encode_bits(bits.ravel(), contexts, config.color_contexts)


def _decode_color(bitstream: MachineBitstream) -> np.ndarray:
    config = bitstream.config
    k = config.color_downsample
    padded_height = bitstream.height + (-bitstream.height % k)
    padded_width = bitstream.width + (-bitstream.width % k)
    block_rows, block_columns = padded_height // k, padded_width // k

    shifts, contexts = _color_layout(config, block_rows, block_columns)
    bits = np.asarray(
        range_coder.rc_decode_bits(
            bitstream.color_payload, contexts, config.color_contexts
        ),
        dtype=np.int64,
    ).reshape(block_rows, block_columns, 3, config.quant_bits)
    quantized = (bits << shifts).sum(axis=-1)

    base = imaging.resize_bilinear(
        quantized / config.levels, padded_height, padded_width
    )
    return base[: bitstream.height, : bitstream.width]


def encode_machine(img: np.ndarray, config: CodecConfig) -> MachineBitstream:
    """Encode an image into a machine bitstream.

    :param img: RGB image, both sides at least 8 pixels
    :param config: codec parameters
    :return: the bitstream
    :raises ValueError: if a side exceeds 65535 pixels
    """
    img = imaging.check_rgb(img, constants.MIN_IMAGE_SIDE)
    height, width = img.shape[:2]
    if height > constants.MAX_IMAGE_SIDE or width > constants.MAX_IMAGE_SIDE:
        err_msg = loc.DIMENSION_OVERFLOW % (constants.MAX_IMAGE_SIDE, height, width)
        LOGGER.critical(err_msg)
        raise ValueError(err_msg)

    edges = compute_edge_map(img, config.edge_threshold)
    edge_payload = range_coder.rc_encode_bits(
        edges.ravel(), edge_contexts(edges), constants.EDGE_CONTEXTS
    )
    color_payload = _encode_color(img, config)

    bitstream = MachineBitstream(width, height, config, edge_payload, color_payload)
    LOGGER.debug(
        'Encoded %dx%d image: %d edge pixels, %d edge bytes, %d color bytes, %.4f bpp',
        width,
        height,
        int(edges.sum()),
        len(edge_payload),
        len(color_payload),
        rate_bpp(bitstream),
    )
    return bitstream


def decode_edge_map(bitstream: MachineBitstream) -> np.ndarray:
    return _decode_edges(bitstream.edge_payload, bitstream.height, bitstream.width)


def decode_machine(bitstream: MachineBitstream) -> np.ndarray:
    """Render the machine decode of a bitstream.

    The color base is dequantized, upsampled to the padded size and cropped
    to the unpadded size stored in the header.
    At contour pixels luma is scaled by ``1 - edge_render_weight``,
    chroma is kept.

    :param bitstream: a well-formed bitstream
    :return: RGB image of the original, unpadded size
    """
    base = _decode_color(bitstream)
    edges = decode_edge_map(bitstream).astype(bool)

    weight = bitstream.config.edge_render_weight
    if weight == 0 or not edges.any():
        return base

    ycc = imaging.rgb_to_ycc(base)
    darkened = imaging.ycc_to_rgb(
        imaging.YccImage(np.where(edges, (1.0 - weight) * ycc.y, ycc.y), ycc.cb, ycc.cr)
    )
    return np.where(edges[..., None], darkened, base)


def rate_bpp(bitstream: MachineBitstream) -> float:
    """Bits per pixel of the whole bitstream over the unpadded image area."""
    return bitstream.total_bytes * 8 / (bitstream.width * bitstream.height)


def write_bitstream(bitstream: MachineBitstream, path: str) -> None:
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, 'wb') as fout:
        fout.write(bitstream.to_bytes())
    LOGGER.debug('Bitstream written to %s', path)


def read_bitstream(path: str) -> MachineBitstream:
    if not os.path.isfile(path):
        err_msg = loc.MISSING_PATH % path
        LOGGER.error(err_msg)
        raise FileNotFoundError(err_msg)
    with open(path, 'rb') as fin:
        return MachineBitstream.from_bytes(fin.read())
