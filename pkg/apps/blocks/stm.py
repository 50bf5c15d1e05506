# -*- coding: utf-8 -*-
"""
STM 块：
    z_ln = LN(z)
    z̃ = MFE(z_ln)
    g = SiLU(Linear(z_ln))
    out = z + Linear(z̃ ⊙ g)
out_proj 零初始化，初始化时整个块是恒等映射。
"""
from apps.base_model import BaseModule
from apps.blocks.mfe import MFE, expanded_width
from apps.ssm.scan import ScanConfig
from apps.tensor import ops
from apps.tensor.layers import LayerNorm, Linear
from apps.tensor.tensor import Tensor
from config import default_alpha, default_state_size
from utils.exceptions import ShapeError


class STMBlock(BaseModule):

    def __init__(self, channels, alpha=default_alpha, state_size=default_state_size, scan_cfg: ScanConfig = None, dtype=None):
        width = expanded_width(channels, alpha)
        self.pre_norm = LayerNorm(channels, dtype=dtype)
        self.mfe = MFE(channels, channels, alpha, state_size, scan_cfg=scan_cfg, dtype=dtype)
        self.gate_proj = Linear(channels, width, dtype=dtype)
        self.out_proj = Linear(width, channels, zero_init=True, dtype=dtype)
        self.channels = channels

    def forward(self, z: Tensor) -> Tensor:
        return stm_forward(z, self)


def stm_forward(z: Tensor, block: STMBlock) -> Tensor:
    if z.ndim != 4 or z.shape[-1] != block.channels:
        raise ShapeError(f"STM: 输入形状 {z.shape} 和通道数 {block.channels} 不匹配")
    z_ln = block.pre_norm(z)
    feature = block.mfe(z_ln)
    gate = ops.silu(block.gate_proj(z_ln))
    return ops.add(z, block.out_proj(ops.mul(feature, gate)))
