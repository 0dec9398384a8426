#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Localization keys"""

# Images
IMAGE_NOT_FOUND = 'Image file not found: %s'
IMAGE_UNREADABLE = 'Cannot decode image file %s. Reason: %s'
IMAGE_WRITE_FAILED = 'Cannot write image file %s. Reason: %s'
IMAGE_TOO_SMALL = 'Image sides must be at least %d pixels, got %dx%d'
IMAGE_BAD_SHAPE = 'Expected an array of shape (height, width, 3), got %s'
IMAGE_NOT_FINITE = 'Image holds non-finite values'
SHAPE_MISMATCH = 'Shape mismatch: %s vs %s'

# Codec
BAD_CODEC_CONFIG = 'Invalid codec configuration: %s'
DIMENSION_OVERFLOW = 'Image sides cannot exceed %d pixels, got %dx%d'
BAD_MAGIC = 'Not a machine bitstream: magic bytes %r'
BAD_VERSION = 'Unsupported bitstream version: %d'
HEADER_UNDERRUN = 'Bitstream too short for its header: %d bytes'
PAYLOAD_UNDERRUN = 'Bitstream payload underrun: %s needs %d bytes, %d left'
TRAILING_BYTES = 'Bitstream has %d trailing bytes'
TRUNCATED_STREAM = 'Range-coded stream truncated after %d bytes'
CONTEXT_OUT_OF_RANGE = 'Context id %d out of range [0, %d)'
LENGTH_MISMATCH = 'Bits and contexts differ in length: %d vs %d'

# Diffusion
BAD_SCHEDULE = 'Invalid noise schedule: %s'
BAD_TIMESTEP = 'Timestep %s outside [1, %d]'
NON_FINITE = 'Non-finite values in %s at step %s'
EMPTY_BATCH = 'Cannot compute a loss on an empty batch'
EMPTY_DATASET = 'The %s dataset is empty'
BASE_MUTATED = 'Base parameters changed during control training: %s != %s'
CHECKSUM_MISMATCH = (
    'Control checkpoint %s was trained on base %s, but base checkpoint %s is %s'
)
ARCHITECTURE_MISMATCH = 'Parameter %s has shape %s, expected %s'
WRONG_CHECKPOINT_KIND = 'Checkpoint %s holds a %s model, expected %s'

# Metrics
FEW_SAMPLES = 'Need at least %d samples, got %d'
SET_METRICS_TOO_FEW = 'Set-level metrics %s need at least %d eval images, got %d'
INVALID_COVARIANCE = 'Covariance has eigenvalue %g below tolerance %g'
UNKNOWN_EMBEDDER = 'Embedder not supported: %s. It should be one of %s'
UNKNOWN_SAMPLER = 'Sampler not supported: %s. It should be one of %s'

# Harness
UNKNOWN_CONFIG_KEY = 'Unknown key in config section %s: %s'
BAD_CONFIG_VALUE = 'Bad value for %s: %r. %s'
MISSING_PATH = 'Path does not exist: %s'
MALFORMED_ROW = 'Malformed RD row at line %d: %s'
UNKNOWN_METRIC = 'Unknown metric label at line %d: %s. It should be one of %s'
MISSING_REFERENCE = 'Reference codec %s has no %s point'
NO_POINTS = 'No rate points for metric %s'
AMBIGUOUS_REFERENCE = 'Reference codec %s has %d %s points, expected one'
BAD_HEADER = 'RD CSV %s has header %s, expected %s'
