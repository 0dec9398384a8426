#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Constant keys"""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

# Image quality metrics
PSNR = 'psnr'
SSIM = 'ssim'
LPIPS = 'lpips'
FID = 'fid'
KID = 'kid'

# Bitrates at matched quality, as reported in comparison tables
LPIPS_MATCHED = 'lpips_matched'
FID_MATCHED = 'fid_matched'
DETECTION_MATCHED = 'detection_matched'
SEGMENTATION_MATCHED = 'segmentation_matched'

# Codec labels emitted by the evaluation
MACHINE = 'machine'
OURS = 'ours'
OURS_CC = 'ours_cc'
OURS_TOTAL = 'ours_total'
OURS_CC_TOTAL = 'ours_cc_total'

# Decoded image kinds inside an evaluation report
MACHINE_DECODE = 'machine_decode'
HUMAN_DECODE = 'human_decode'
HUMAN_DECODE_CC = 'human_decode_cc'

# Whether the color controller is applied to the written human decodes
CC = 'cc'

# Samplers
DDPM = 'ddpm'
DDIM = 'ddim'

# Feature embedders
RANDOM_CONV = 'random_conv'

# Experiment config sections
DATASET = 'dataset'
CODEC = 'codec'
DIFFUSION = 'diffusion'
SAMPLING = 'sampling'
EVAL = 'eval'
WORKDIR = 'workdir'

# Checkpoint metadata
KIND = 'kind'
BASE = 'base'
CONTROL = 'control'
ARCHITECTURE = 'architecture'
SCHEDULE = 'schedule'
STEP = 'step'
EMA = 'ema'
RNG_STATE = 'rng_state'
BASE_CHECKSUM = 'base_checksum'
CONFIG = 'config'
LOSSES = 'losses'

# RD CSV columns
CODEC_COLUMN = 'codec'
METRIC_COLUMN = 'metric'
BPP_COLUMN = 'bpp'
VALUE_COLUMN = 'value'
DELTA_COLUMN = 'delta_percent'

# Dataset manifest
FILENAMES = 'filenames'
SEED = 'seed'
COUNT = 'count'
TRAIN = 'train'
TEST = 'eval'
