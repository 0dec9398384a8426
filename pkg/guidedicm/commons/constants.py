#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Constants"""

__author__ = 'guidedicm authors'
__version__ = '1.0'
__license__ = 'GPL-3.0'
__copyright__ = 'Copyleft 2024, guidedicm authors'

import os

from guidedicm.commons import keys

# Folders
WORK_FOLDER = 'work'
DATA_FOLDER = 'data'
BITSTREAMS_FOLDER = 'bitstreams'
MODELS_FOLDER = 'models'
RESULTS_FOLDER = 'results'
PLOTS_FOLDER = 'plots'
HUMAN_DECODES_FOLDER = 'human_decodes'

# File names
MANIFEST_FILENAME = 'manifest.json'
IMAGE_FILENAME = 'img_{:06d}.png'
BITSTREAM_EXTENSION = '.gmvb'
BASE_CHECKPOINT_FILENAME = 'base.h5'
CONTROL_CHECKPOINT_FILENAME = 'control.h5'
EVAL_REPORT_FILENAME = 'eval_report.yaml'
EVAL_RECORDS_FILENAME = 'eval_images.csv'
RATE_POINTS_FILENAME = 'rate_points.csv'
COMPARISON_FILENAME = 'bitrate_comparison.csv'
PLOT_FILENAME = 'rd_{}.png'
RESOLVED_CONFIG_FILENAME = 'config.yaml'

# Paths, relative to the work folder
MANIFEST = os.path.join(DATA_FOLDER, MANIFEST_FILENAME)
BASE_CHECKPOINT = os.path.join(MODELS_FOLDER, BASE_CHECKPOINT_FILENAME)
CONTROL_CHECKPOINT = os.path.join(MODELS_FOLDER, CONTROL_CHECKPOINT_FILENAME)
EVAL_REPORT = os.path.join(RESULTS_FOLDER, EVAL_REPORT_FILENAME)
EVAL_RECORDS = os.path.join(RESULTS_FOLDER, EVAL_RECORDS_FILENAME)
RATE_POINTS = os.path.join(RESULTS_FOLDER, RATE_POINTS_FILENAME)
COMPARISON = os.path.join(RESULTS_FOLDER, COMPARISON_FILENAME)
PLOTS = os.path.join(RESULTS_FOLDER, PLOTS_FOLDER)
HUMAN_DECODES = os.path.join(RESULTS_FOLDER, HUMAN_DECODES_FOLDER)

# Bundled resources
RESOURCES_MODULE = 'guidedicm.evaluator.resources'
PUBLISHED_RATES_FILENAME = 'published_rates.csv'

# Images
MIN_IMAGE_SIDE = 8
PIXEL_LEVELS = 255

# BT.601 full-range YCbCr
LUMA_R = 0.299
LUMA_G = 0.587
LUMA_B = 0.114
CHROMA_B = 0.564
CHROMA_R = 0.713

### Machine codec
BITSTREAM_MAGIC = b'GMVB'
BITSTREAM_VERSION = 1
# magic, version, width, height, edge threshold, color downsample,
# quantization bits, edge render weight
BITSTREAM_HEADER_FORMAT = '>4sBHHfBBf'
PAYLOAD_LENGTH_FORMAT = '>I'
MAX_IMAGE_SIDE = 65535
EDGE_CONTEXTS = 8
MIN_QUANT_BITS = 2
MAX_QUANT_BITS = 8
MIN_COLOR_DOWNSAMPLE = 2
MAX_COLOR_DOWNSAMPLE = 255

CODEC_PARAMS = {
    'edge_threshold': 2.0,
    'color_downsample': 8,
    'quant_bits': 4,
    'edge_render_weight': 0.7,
}

# Adaptive binary range coder
RC_TOP = 1 << 24
RC_RANGE_INIT = 0xFFFFFFFF
RC_PROBABILITY_BITS = 12
RC_PROBABILITY_ONE = 1 << RC_PROBABILITY_BITS
RC_PROBABILITY_INIT = RC_PROBABILITY_ONE >> 1
RC_ADAPTATION_SHIFT = 5
RC_FLUSH_BYTES = 4

### Diffusion
SCHEDULE_PARAMS = {'steps': 1000, 'beta_start': 1e-4, 'beta_end': 0.02}

ARCHITECTURE_PARAMS = {
    'image_size': 64,
    'base_channels': 64,
    'channel_multipliers': (1, 2, 2),
    'num_res_blocks': 2,
    'attention_resolutions': (16,),
    'norm_groups': 8,
    'time_embedding_dim': 128,
}
MIN_DIFFUSION_IMAGE_SIZE = 32
MAX_DIFFUSION_IMAGE_SIZE = 128

OPTIMIZER_PARAMS = {
    'learning_rate': 1e-4,
    'batch_size': 64,
    'global_clipnorm': 1.0,
    'ema_decay': 0.999,
}
TRAINING_STEPS = {keys.BASE: 30_000, keys.CONTROL: 15_000}
LOSS_LOG_EVERY = 100
CHECKPOINT_EVERY = 1000
LOSS_MOVING_AVERAGE_WINDOW = 100

# Condition encoder: machine decode RGB -> base-channel feature map
CONDITION_ENCODER_CHANNELS = (32, 64)

### Sampling
SAMPLERS = (keys.DDPM, keys.DDIM)
SAMPLING_PARAMS = {
    'sampler': keys.DDIM,
    'steps': 50,
    'seed': 1984,
    'cc': True,
    'batch_size': 16,
}

### Evaluation
CURVE_METRICS = (keys.PSNR, keys.SSIM, keys.LPIPS, keys.FID, keys.KID)
MATCHED_METRICS = (
    keys.LPIPS_MATCHED,
    keys.FID_MATCHED,
    keys.DETECTION_MATCHED,
    keys.SEGMENTATION_MATCHED,
)
RATE_POINT_METRICS = CURVE_METRICS + MATCHED_METRICS
PER_IMAGE_METRICS = (keys.PSNR, keys.SSIM, keys.LPIPS)
SET_METRICS = (keys.FID, keys.KID)

# Whether a higher value is better, for plot annotations
METRIC_ARROWS = {
    keys.PSNR: '↑',
    keys.SSIM: '↑',
    keys.LPIPS: '↓',
    keys.FID: '↓',
    keys.KID: '↓',
}
METRIC_UNITS = {keys.PSNR: ' [dB]'}

PSNR_CAP = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
LPIPS_EPSILON = 1e-10
FID_EIGENVALUE_TOLERANCE = -1e-8
KID_MAX_BLOCK_SIZE = 100
KID_MIN_BLOCK_SIZE = 2
# FID and KID need at least this many images per set
MIN_SET_SAMPLES = 2

EMBEDDERS = {'random_conv': keys.RANDOM_CONV}
RANDOM_CONV_PARAMS = {
    'channels': (32, 64, 128, 256),
    'kernel_size': 3,
    'seed': 610,
    'batch_size': 64,
}

EVAL_PARAMS = {
    'metrics': CURVE_METRICS,
    'embedder': 'random_conv',
    'workers': 1,
    'mismatched_probe': False,
}

### Dataset
DATASET_PARAMS = {
    'source_dir': None,
    'image_size': 64,
    'train_count': 2000,
    'eval_count': 200,
    'split_seed': 42,
    'generator_seed': 7,
}
MIN_SHAPES = 2
MAX_SHAPES = 5
SHAPES = ('ellipse', 'rectangle', 'triangle')
TEXTURE_SIGMA = (0.6, 1.0)
TEXTURE_AMPLITUDE = (0.10, 0.15)
