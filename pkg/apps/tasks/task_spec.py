# -*- coding: utf-8 -*-
from typing import Optional

from pydantic import BaseModel as pydanticBaseModel, Field, model_validator

from apps.enums import LossKindEnum, MetricKindEnum, TaskKindEnum

# 任务类型决定默认的损失和指标：深度/法向用 ℓ1，其余用交叉熵
_DEFAULTS = {
    TaskKindEnum.segmentation: (LossKindEnum.cross_entropy, MetricKindEnum.miou),
    TaskKindEnum.depth: (LossKindEnum.l1, MetricKindEnum.rmse),
    TaskKindEnum.normal: (LossKindEnum.l1, MetricKindEnum.merr),
    TaskKindEnum.boundary: (LossKindEnum.cross_entropy, MetricKindEnum.f1),
}
_FIXED_CHANNELS = {TaskKindEnum.depth: 1, TaskKindEnum.normal: 3, TaskKindEnum.boundary: 1}
HIGHER_IS_BETTER = {
    MetricKindEnum.miou: True,
    MetricKindEnum.f1: True,
    MetricKindEnum.rmse: False,
    MetricKindEnum.merr: False,
}


class TaskSpec(pydanticBaseModel):
    name: str = Field(..., min_length=1, title="任务名")
    kind: TaskKindEnum = Field(..., title="任务类型")
    out_channels: Optional[int] = Field(None, ge=1, title="输出通道数，语义分割为类别数K")
    loss: Optional[LossKindEnum] = Field(None, title="损失函数")
    metric: Optional[MetricKindEnum] = Field(None, title="评估指标")
    higher_is_better: Optional[bool] = Field(None, title="指标是否越大越好")

    @model_validator(mode="after")
    def fill_defaults(self):
        """ 没填的字段按任务类型补默认值 """
        loss, metric = _DEFAULTS[self.kind]
        if self.loss is None:
            self.loss = loss
        if self.metric is None:
            self.metric = metric
        if self.higher_is_better is None:
            self.higher_is_better = HIGHER_IS_BETTER[self.metric]
        if self.out_channels is None:
            if self.kind not in _FIXED_CHANNELS:
                raise ValueError("语义分割任务必须指定类别数 out_channels")
            self.out_channels = _FIXED_CHANNELS[self.kind]
        elif self.kind in _FIXED_CHANNELS and self.out_channels != _FIXED_CHANNELS[self.kind]:
            raise ValueError(f"{self.kind.value} 任务的输出通道数必须为 {_FIXED_CHANNELS[self.kind]}")
        return self

    @classmethod
    def from_kind(cls, kind, num_classes=None, name=None):
        kind = TaskKindEnum(kind)
        return cls(
            name=name or kind.value,
            kind=kind,
            out_channels=num_classes if kind == TaskKindEnum.segmentation else None
        )
