# -*- coding: utf-8 -*-
from apps.base_model import BaseModule
from apps.ssm.params import SSMParams
from apps.ssm.scan import ScanConfig
from apps.ssm.ss2d import DIRECTION_COUNT, ss2d
from apps.tensor import ops
from apps.tensor.layers import DepthwiseConv2d, LayerNorm, Linear
from apps.tensor.tensor import Tensor
from config import default_alpha, default_conv_kernel, default_state_size
from utils.exceptions import ConfigError, ShapeError


def expanded_width(channels, alpha):
    width = alpha * channels
    if width != int(width) or width < 1:
        raise ConfigError(f"α·C 必须是正整数，收到 α={alpha}, C={channels}")
    return int(width)


class MFE(BaseModule):
    """ Mamba 特征提取：Linear -> 逐通道卷积 -> SiLU -> SS2D -> LN，输出 α·C 通道 """

    def __init__(
            self,
            in_channels,
            channels,
            alpha=default_alpha,
            state_size=default_state_size,
            kernel_size=default_conv_kernel,
            scan_cfg: ScanConfig = None,
            dtype=None
    ):
        width = expanded_width(channels, alpha)
        self.in_proj = Linear(in_channels, width, dtype=dtype)
        self.conv = DepthwiseConv2d(width, kernel_size, dtype=dtype)
        self.ss2d = [SSMParams(width, state_size, dtype=dtype) for _ in range(DIRECTION_COUNT)]
        self.norm = LayerNorm(width, dtype=dtype)
        self.in_channels = in_channels
        self.width = width
        self.scan_cfg = scan_cfg

    def forward(self, z: Tensor) -> Tensor:
        return mfe_forward(z, self)


def mfe_forward(z: Tensor, mfe: MFE) -> Tensor:
    if z.ndim != 4 or z.shape[-1] != mfe.in_channels:
        raise ShapeError(f"MFE: 输入形状 {z.shape} 和输入通道数 {mfe.in_channels} 不匹配")
    out = mfe.in_proj(z)
    out = mfe.conv(out)
    out = ops.silu(out)
    out = ss2d(out, mfe.ss2d, mfe.scan_cfg)
    return mfe.norm(out)
