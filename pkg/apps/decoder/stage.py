# -*- coding: utf-8 -*-
"""
解码器的一个 stage，第 i 个 stage 的输入宽度为 8C/2^(i-1)，输出宽度减半：

    r^t = PatchExpand(z^t_{i-1})
    r^t = Linear(concat(r^t, skip))
    r^t = STM(...STM(r^t))
    {z^t_i} = CTM({r^t})
"""
from typing import List, Sequence

from apps.base_model import BaseModule
from apps.blocks.ctm import CTMBlock
from apps.blocks.patch_expand import PatchExpand, patch_expand
from apps.blocks.stm import STMBlock
from apps.enums import CTMGateModeEnum
from apps.ssm.scan import ScanConfig
from apps.tensor import ops
from apps.tensor.layers import Linear
from apps.tensor.tensor import Tensor
from config import default_alpha, default_state_size
from utils.exceptions import ConfigError, ShapeError


class TaskBranch(BaseModule):
    """ 一个任务在 stage 内独有的部分 """

    def __init__(self, in_width, stm_count, alpha, state_size, scan_cfg, dtype=None):
        out_width = in_width // 2
        self.expand = PatchExpand(in_width, dtype=dtype)
        self.fuse = Linear(2 * out_width, out_width, dtype=dtype)
        self.stm = [STMBlock(out_width, alpha, state_size, scan_cfg, dtype=dtype) for _ in range(stm_count)]

    def forward(self, prev: Tensor, skip: Tensor) -> Tensor:
        expanded = patch_expand(prev, self.expand)
        if skip.shape != expanded.shape:
            raise ShapeError(f"skip 接线错误：上采样后形状 {expanded.shape}，skip 形状 {skip.shape}")
        out = self.fuse(ops.concat([expanded, skip], axis=-1))
        for block in self.stm:
            out = block(out)
        return out


class DecoderStage(BaseModule):

    def __init__(
            self,
            in_width,
            num_tasks,
            stm_count=2,
            ctm_enabled=True,
            alpha=default_alpha,
            state_size=default_state_size,
            scan_cfg: ScanConfig = None,
            gate_mode=CTMGateModeEnum.adaptive,
            dtype=None
    ):
        if in_width % 2:
            raise ConfigError(f"stage 输入宽度 {in_width} 必须为偶数")
        if stm_count < 1:
            raise ConfigError(f"每个 stage 至少 1 个 STM，收到 {stm_count}")
        self.branch = [TaskBranch(in_width, stm_count, alpha, state_size, scan_cfg, dtype) for _ in range(num_tasks)]
        self.ctm = CTMBlock(
            num_tasks, in_width // 2, alpha, state_size, scan_cfg, gate_mode, dtype=dtype
        ) if ctm_enabled else None
        self.in_width = in_width
        self.out_width = in_width // 2
        self.num_tasks = num_tasks

    def forward(self, prev: Sequence[Tensor], skip: Tensor) -> List[Tensor]:
        return stage_forward(prev, skip, self)


def stage_forward(prev: Sequence[Tensor], skip: Tensor, stage: DecoderStage) -> List[Tensor]:
    prev = list(prev)
    if len(prev) != stage.num_tasks:
        raise ConfigError(f"stage 需要 {stage.num_tasks} 个任务特征，收到 {len(prev)}")
    if any(item.shape != prev[0].shape for item in prev):
        raise ShapeError(f"stage 输入的任务特征形状不一致：{[item.shape for item in prev]}")
    fused = [branch(feature, skip) for branch, feature in zip(stage.branch, prev)]
    return stage.ctm(fused) if stage.ctm is not None else fused
