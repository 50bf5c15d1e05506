# -*- coding: utf-8 -*-
"""
玩具卷积编码器，输出和 Swin 编码器一致的四尺度特征：
    f1 (B, H/4,  W/4,  C)
    f2 (B, H/8,  W/8,  2C)
    f3 (B, H/16, W/16, 4C)
    f4 (B, H/32, W/32, 8C)
"""
import math
from typing import NamedTuple

from apps.base_model import BaseModule
from apps.tensor import ops
from apps.tensor.layers import DepthwiseConv2d, Linear
from apps.tensor.tensor import Tensor
from utils.exceptions import ConfigError, ShapeError

ENCODER_STRIDE = 32
IMAGE_CHANNELS = 3


class EncoderFeatures(NamedTuple):
    f1: Tensor
    f2: Tensor
    f3: Tensor
    f4: Tensor


def check_image_size(height, width):
    if height % ENCODER_STRIDE or width % ENCODER_STRIDE:
        pad_h = math.ceil(height / ENCODER_STRIDE) * ENCODER_STRIDE
        pad_w = math.ceil(width / ENCODER_STRIDE) * ENCODER_STRIDE
        raise ConfigError(
            f"图像尺寸 {height}×{width} 必须能被 {ENCODER_STRIDE} 整除，请填充到 {pad_h}×{pad_w}"
            f"（高补 {pad_h - height}，宽补 {pad_w - width} 像素）"
        )


class ToyEncoder(BaseModule):
    """ stem 做 4×4 patch 切分，后面三次 2×2 下采样，每一级后接逐通道卷积和 SiLU """

    def __init__(self, base_width, dtype=None):
        self.stem = Linear(4 * 4 * IMAGE_CHANNELS, base_width, dtype=dtype)
        widths = [base_width * 2 ** level for level in range(4)]
        self.downs = [Linear(4 * widths[level - 1], widths[level], dtype=dtype) for level in range(1, 4)]
        self.convs = [DepthwiseConv2d(width, dtype=dtype) for width in widths]
        self.base_width = base_width

    def forward(self, image: Tensor) -> EncoderFeatures:
        return toy_encoder_forward(image, self)


def toy_encoder_forward(image: Tensor, encoder: ToyEncoder) -> EncoderFeatures:
    if image.ndim != 4 or image.shape[-1] != IMAGE_CHANNELS:
        raise ShapeError(f"编码器输入必须是 (B,H,W,{IMAGE_CHANNELS})，收到 {image.shape}")
    check_image_size(image.shape[1], image.shape[2])
    feature = encoder.stem(ops.space_to_depth(image, 4))
    feature = ops.silu(encoder.convs[0](feature))
    features = [feature]
    for down, conv in zip(encoder.downs, encoder.convs[1:]):
        feature = down(ops.space_to_depth(feature, 2))
        feature = ops.silu(conv(feature))
        features.append(feature)
    return EncoderFeatures(*features)
