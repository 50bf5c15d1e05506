# -*- coding: utf-8 -*-
from typing import Dict, Optional

from pydantic import BaseModel as pydanticBaseModel, Field

from utils.exceptions import DataError
from utils.util.json_util import JsonUtil


class TaskMetric(pydanticBaseModel):
    metric: str = Field(..., title="指标名")
    value: float = Field(..., title="指标值")
    higher_is_better: bool = Field(..., title="是否越大越好")


class MetricReport(pydanticBaseModel):
    tasks: Dict[str, TaskMetric] = Field(default_factory=dict, title="每个任务的指标")
    delta_m: Optional[float] = Field(None, title="相对单任务基线的 Δm(%)")

    def add(self, name, metric, value, higher_is_better):
        self.tasks[name] = TaskMetric(metric=str(getattr(metric, "value", metric)), value=value, higher_is_better=higher_is_better)
        return self

    def to_json(self):
        """ {task: {metric, value, higher_is_better}, "delta_m": value?} """
        content = {name: item.model_dump() for name, item in self.tasks.items()}
        if self.delta_m is not None:
            content["delta_m"] = self.delta_m
        return content

    def dumps(self):
        return JsonUtil.dumps(self.to_json())

    @classmethod
    def from_json(cls, content: dict):
        content = dict(content)
        delta = content.pop("delta_m", None)
        return cls(tasks={name: TaskMetric(**item) for name, item in content.items()}, delta_m=delta)


def delta_m(current: MetricReport, baseline: MetricReport) -> float:
    """ Δm = 100/T · Σ_t (-1)^{l_t} (M_t - S_t) / S_t，越小越好的指标 l_t = 1 """
    if set(current.tasks) != set(baseline.tasks):
        raise DataError(f"Δm 需要相同的任务集合：{sorted(current.tasks)} vs {sorted(baseline.tasks)}")
    total = 0.0
    for name in sorted(current.tasks):
        now, base = current.tasks[name], baseline.tasks[name]
        if base.value == 0:
            raise DataError(f"任务 {name} 的基线指标为 0，Δm 无定义")
        sign = 1.0 if base.higher_is_better else -1.0
        total += sign * (now.value - base.value) / base.value
    return 100.0 * total / len(current.tasks)


def with_delta_m(current: MetricReport, baseline: MetricReport) -> MetricReport:
    return current.model_copy(update={"delta_m": delta_m(current, baseline)})
