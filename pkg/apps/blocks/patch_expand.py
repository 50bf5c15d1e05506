# -*- coding: utf-8 -*-
from apps.base_model import BaseModule
from apps.tensor import ops
from apps.tensor.layers import Linear
from apps.tensor.tensor import Tensor
from utils.exceptions import ConfigError, ShapeError


class PatchExpand(BaseModule):
    """
    Linear(C_in -> s²·C_out) 后把通道重排到 s×s 的空间块：
        out[b, s·i+p, s·j+q, c] = proj(z)[b, i, j, (s·p+q)·C_out + c]
    """

    def __init__(self, in_channels, out_channels=None, scale=2, dtype=None):
        if out_channels is None:
            if in_channels % scale:
                raise ConfigError(f"PatchExpand: 通道数 {in_channels} 不能被 {scale} 整除，无法缩减通道")
            out_channels = in_channels // scale
        self.proj = Linear(in_channels, scale * scale * out_channels, bias=False, dtype=dtype)
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.scale = scale

    def forward(self, z: Tensor) -> Tensor:
        if z.ndim != 4 or z.shape[-1] != self.in_channels:
            raise ShapeError(f"PatchExpand: 输入形状 {z.shape} 和输入通道数 {self.in_channels} 不匹配")
        return ops.depth_to_space(self.proj(z), self.scale)


def patch_expand(z: Tensor, layer: PatchExpand) -> Tensor:
    """ 2× 上采样，通道减半：(B,H,W,C) -> (B,2H,2W,C/2) """
    if layer.scale != 2:
        raise ConfigError(f"patch_expand 需要 2× 的层，收到 {layer.scale}×")
    return layer(z)


def final_patch_expand(z: Tensor, layer: PatchExpand) -> Tensor:
    """ 输出头里的 4× 上采样：(B,H,W,C) -> (B,4H,4W,C_out) """
    if layer.scale != 4:
        raise ConfigError(f"final_patch_expand 需要 4× 的层，收到 {layer.scale}×")
    return layer(z)
