# -*- coding: utf-8 -*-
from apps.base_model import BaseModule
from apps.blocks.patch_expand import PatchExpand, final_patch_expand
from apps.tasks.task_spec import TaskSpec
from apps.tensor.layers import Linear
from apps.tensor.tensor import Tensor
from utils.exceptions import ShapeError


class TaskHead(BaseModule):
    """ 4× patch expand 恢复到原分辨率，再线性映射到任务输出通道，不接激活 """

    def __init__(self, channels, spec: TaskSpec, dtype=None):
        self.expand = PatchExpand(channels, channels, scale=4, dtype=dtype)
        self.out = Linear(channels, spec.out_channels, dtype=dtype)
        self.channels = channels
        self.spec = spec

    def forward(self, z: Tensor) -> Tensor:
        return head_forward(z, self)


def head_forward(z: Tensor, head: TaskHead) -> Tensor:
    if z.ndim != 4 or z.shape[-1] != head.channels:
        raise ShapeError(f"输出头 {head.spec.name}: 输入形状 {z.shape} 和通道数 {head.channels} 不匹配")
    return head.out(final_patch_expand(z, head.expand))

