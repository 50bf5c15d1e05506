# -*- coding: utf-8 -*-
"""
CTM 块，T 个任务共 T+1 个 MFE：

    z̃^t  = MFE_t(LN_t(z^t))
    z̃^sh = MFE_sh(LN_sh(concat_t z^t))        T·C -> α·C
    g^t  = sigmoid(Linear_t(LN_t(z^t)))
    out^t = z^t + Linear_t(g^t ⋆ z̃^t + (1 - g^t) ⋆ z̃^sh)

gate_mode 为 task_only 时 g^t 固定为 1，shared_only 时固定为 0，此时不创建门控参数。
"""
from typing import List, Sequence

from apps.base_model import BaseModule
from apps.blocks.mfe import MFE, expanded_width
from apps.enums import CTMGateModeEnum
from apps.ssm.scan import ScanConfig
from apps.tensor import ops
from apps.tensor.layers import LayerNorm, Linear
from apps.tensor.tensor import Tensor
from config import default_alpha, default_state_size
from utils.exceptions import ConfigError


class CTMBlock(BaseModule):

    def __init__(
            self,
            num_tasks,
            channels,
            alpha=default_alpha,
            state_size=default_state_size,
            scan_cfg: ScanConfig = None,
            gate_mode=CTMGateModeEnum.adaptive,
            dtype=None
    ):
        if num_tasks < 1:
            raise ConfigError(f"CTM 至少需要 1 个任务，收到 {num_tasks}")
        width = expanded_width(channels, alpha)
        self.gate_mode = CTMGateModeEnum(gate_mode)
        self.pre_norm = [LayerNorm(channels, dtype=dtype) for _ in range(num_tasks)]
        self.mfe = [MFE(channels, channels, alpha, state_size, scan_cfg=scan_cfg, dtype=dtype) for _ in range(num_tasks)]
        self.gate_proj = [
            Linear(channels, width, dtype=dtype) for _ in range(num_tasks)
        ] if self.gate_mode == CTMGateModeEnum.adaptive else []
        self.out_proj = [Linear(width, channels, zero_init=True, dtype=dtype) for _ in range(num_tasks)]
        self.shared_norm = LayerNorm(num_tasks * channels, dtype=dtype)
        self.mfe_sh = MFE(num_tasks * channels, channels, alpha, state_size, scan_cfg=scan_cfg, dtype=dtype)
        self.num_tasks = num_tasks
        self.channels = channels

    def forward(self, features: Sequence[Tensor]) -> List[Tensor]:
        return ctm_forward(features, self)

    def gate(self, task, z_ln: Tensor) -> Tensor:
        return ops.sigmoid(self.gate_proj[task](z_ln))


def blend(gate: Tensor, task_feature: Tensor, shared_feature: Tensor) -> Tensor:
    """ g ⋆ z̃^t + (1 - g) ⋆ z̃^sh """
    return ops.add(ops.mul(gate, task_feature), ops.mul(ops.sub(1.0, gate), shared_feature))


def ctm_forward(features: Sequence[Tensor], block: CTMBlock) -> List[Tensor]:
    features = list(features)
    if len(features) != block.num_tasks:
        raise ConfigError(f"CTM 需要 {block.num_tasks} 个任务特征，收到 {len(features)}")
    shape = features[0].shape
    if len(shape) != 4 or shape[-1] != block.channels or any(item.shape != shape for item in features):
        raise ConfigError(f"CTM 的任务特征形状必须一致且通道数为 {block.channels}，收到 {[item.shape for item in features]}")

    shared = block.mfe_sh(block.shared_norm(ops.concat(features, axis=-1)))
    outputs = []
    for task, z in enumerate(features):
        z_ln = block.pre_norm[task](z)
        task_feature = block.mfe[task](z_ln)
        if block.gate_mode == CTMGateModeEnum.task_only:
            mixed = task_feature
        elif block.gate_mode == CTMGateModeEnum.shared_only:
            mixed = shared
        else:
            mixed = blend(block.gate(task, z_ln), task_feature, shared)
        outputs.append(ops.add(z, block.out_proj[task](mixed)))
    return outputs
