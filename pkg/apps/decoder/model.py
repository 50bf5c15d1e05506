# -*- coding: utf-8 -*-
from typing import Dict, List, Sequence

from apps.base_model import BaseModule
from apps.decoder.encoder import EncoderFeatures, ToyEncoder, toy_encoder_forward
from apps.decoder.stage import DecoderStage, stage_forward
from apps.enums import CTMGateModeEnum
from apps.ssm.scan import ScanConfig
from apps.tasks.heads import TaskHead, head_forward
from apps.tasks.task_spec import TaskSpec
from apps.tensor.tensor import Tensor
from config import default_alpha, default_state_size
from utils.exceptions import ConfigError


class MTMambaDecoder(BaseModule):
    """ 三个 stage，宽度 8C -> 4C -> 2C -> C，skip 依次为 f3、f2、f1 """

    def __init__(
            self,
            base_width,
            num_tasks,
            stm_count=2,
            ctm_enabled=True,
            alpha=default_alpha,
            state_size=default_state_size,
            scan_cfg: ScanConfig = None,
            gate_mode=CTMGateModeEnum.adaptive,
            dtype=None
    ):
        if num_tasks < 1:
            raise ConfigError("至少需要一个任务")
        kwargs = dict(
            num_tasks=num_tasks, stm_count=stm_count, ctm_enabled=ctm_enabled, alpha=alpha,
            state_size=state_size, scan_cfg=scan_cfg, gate_mode=gate_mode, dtype=dtype
        )
        self.stage1 = DecoderStage(8 * base_width, **kwargs)
        self.stage2 = DecoderStage(4 * base_width, **kwargs)
        self.stage3 = DecoderStage(2 * base_width, **kwargs)
        self.num_tasks = num_tasks

    def stages(self) -> List[DecoderStage]:
        return [self.stage1, self.stage2, self.stage3]

    def forward(self, feats: EncoderFeatures) -> List[Tensor]:
        return decoder_forward(feats, self)


def decoder_forward(feats: EncoderFeatures, decoder: MTMambaDecoder, return_stages=False):
    """ z_0^t = f4；返回每个任务 (B, H/4, W/4, C) 的特征，return_stages 时同时返回每个 stage 的输出 """
    features = [feats.f4] * decoder.num_tasks
    intermediates = []
    for stage, skip in zip(decoder.stages(), (feats.f3, feats.f2, feats.f1)):
        features = stage_forward(features, skip, stage)
        intermediates.append(features)
    return (features, intermediates) if return_stages else features


class MTMamba(BaseModule):
    """ 共享编码器 + Mamba 解码器 + 每个任务一个输出头 """

    def __init__(
            self,
            tasks: Sequence[TaskSpec],
            base_width,
            stm_count=2,
            ctm_enabled=True,
            alpha=default_alpha,
            state_size=default_state_size,
            scan_cfg: ScanConfig = None,
            gate_mode=CTMGateModeEnum.adaptive,
            dtype=None
    ):
        names = [task.name for task in tasks]
        if len(set(names)) != len(names):
            raise ConfigError(f"任务名不能重复：{names}")
        self.encoder = ToyEncoder(base_width, dtype=dtype)
        self.decoder = MTMambaDecoder(
            base_width, len(tasks), stm_count, ctm_enabled, alpha, state_size, scan_cfg, gate_mode, dtype
        )
        self.heads = [TaskHead(base_width, task, dtype=dtype) for task in tasks]
        self.tasks = list(tasks)

    @property
    def dtype(self):
        """ 参数的计算精度，输入图像按它转换 """
        return self.encoder.stem.weight.dtype

    def forward(self, image: Tensor) -> Dict[str, Tensor]:
        features = decoder_forward(toy_encoder_forward(image, self.encoder), self.decoder)
        return {
            task.name: head_forward(feature, head)
            for task, feature, head in zip(self.tasks, features, self.heads)
        }
