# -*- coding: utf-8 -*-
"""
实验配置 RunConfig 以及它的 key=value 文本格式：
    # 注释行和空行忽略
    seed=0
    tasks=segmentation,depth
    image_size=64,64
    betas=0.9,0.999
未知的 key 直接报错。
"""
import io
import math
from typing import List, Optional, Tuple

from pydantic import BaseModel as pydanticBaseModel, Field, ValidationError, field_validator, model_validator

from apps.enums import CTMGateModeEnum, DtypeEnum, EncoderScaleEnum, ScanModeEnum, TaskKindEnum
from apps.ssm.scan import ScanConfig
from apps.tasks.task_spec import TaskSpec
from config import (
    _default_data_dir, _default_out_dir, default_adam_eps, default_alpha, default_betas, default_chunk_len, default_lr,
    default_poly_power, default_state_size, default_weight_decay
)
from utils.exceptions import ConfigError

_LIST_FIELDS = ("tasks", "image_size", "betas", "loss_weights")


def _split_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class RunConfig(pydanticBaseModel):
    model_config = {"extra": "forbid", "validate_assignment": True}

    seed: int = Field(0, ge=0, lt=2 ** 64, title="随机种子")
    image_size: Tuple[int, int] = Field((64, 64), title="图像尺寸 H,W，必须能被32整除")
    base_width: int = Field(32, ge=1, title="编码器基础宽度 C")
    encoder_scale: Optional[EncoderScaleEnum] = Field(None, title="编码器规模，设置后覆盖 base_width")
    state_size: int = Field(default_state_size, ge=1, title="SSM 状态维度 N")
    alpha: int = Field(default_alpha, ge=1, title="MFE 通道扩张倍数 α")
    tasks: List[TaskKindEnum] = Field([TaskKindEnum.segmentation, TaskKindEnum.depth], min_length=1, title="任务列表")
    num_classes: int = Field(5, ge=2, title="语义分割类别数 K")
    stm_per_stage: int = Field(2, ge=1, le=3, title="每个 stage 每个任务的 STM 个数")
    ctm_enabled: bool = Field(True, title="是否启用 CTM")
    ctm_gate_mode: CTMGateModeEnum = Field(CTMGateModeEnum.adaptive, title="CTM 门控方式")
    scan_mode: ScanModeEnum = Field(ScanModeEnum.chunked, title="扫描实现")
    chunk_len: int = Field(default_chunk_len, ge=1, title="分块扫描的块长")
    lr: float = Field(default_lr, ge=0, title="基础学习率")
    weight_decay: float = Field(default_weight_decay, ge=0, title="权重衰减")
    betas: Tuple[float, float] = Field(default_betas, title="AdamW 的 β1,β2")
    eps: float = Field(default_adam_eps, gt=0, title="AdamW 的 eps")
    poly_power: float = Field(default_poly_power, gt=0, title="多项式学习率的幂次")
    loss_weights: Optional[List[float]] = Field(None, title="任务损失权重，默认全为1")
    iterations: int = Field(500, ge=1, title="训练步数")
    batch_size: int = Field(4, ge=1, title="batch 大小")
    dtype: DtypeEnum = Field(DtypeEnum.float32, title="计算精度")
    n_train: int = Field(64, ge=1, title="训练集样本数")
    n_val: int = Field(16, ge=1, title="验证集样本数")
    data_dir: str = Field(_default_data_dir, min_length=1, title="数据集目录")
    out_dir: str = Field(_default_out_dir, min_length=1, title="训练产物目录")
    eval_every: int = Field(50, ge=1, title="每多少步在验证集上算一次损失")
    save_every: int = Field(50, ge=1, title="每多少步保存一次 last_good 权重")

    @field_validator(*_LIST_FIELDS, mode="before")
    @classmethod
    def split_list(cls, value):
        return _split_list(value)

    @field_validator("image_size")
    @classmethod
    def check_image_size(cls, value):
        height, width = value
        if height < 32 or width < 32 or height % 32 or width % 32:
            pad_h, pad_w = max(32, math.ceil(height / 32) * 32), max(32, math.ceil(width / 32) * 32)
            raise ValueError(f"图像尺寸 {height}×{width} 必须是32的正整数倍，可以填充到 {pad_h}×{pad_w}")
        return value

    @field_validator("betas")
    @classmethod
    def check_betas(cls, value):
        if not all(0 <= beta < 1 for beta in value):
            raise ValueError(f"betas 必须在 [0,1) 内，收到 {value}")
        return value

    @model_validator(mode="after")
    def check_tasks(self):
        if len(set(self.tasks)) != len(self.tasks):
            raise ValueError(f"任务不能重复：{[task.value for task in self.tasks]}")
        if self.loss_weights is not None and len(self.loss_weights) != len(self.tasks):
            raise ValueError(f"loss_weights 个数 {len(self.loss_weights)} 和任务数 {len(self.tasks)} 不一致")
        return self

    @property
    def width(self):
        """ 实际使用的编码器基础宽度 """
        return self.encoder_scale.base_width if self.encoder_scale else self.base_width

    @property
    def scan(self) -> ScanConfig:
        return ScanConfig(mode=self.scan_mode, chunk_len=self.chunk_len)

    @property
    def weights(self) -> List[float]:
        return list(self.loss_weights) if self.loss_weights is not None else [1.0] * len(self.tasks)

    def task_specs(self) -> List[TaskSpec]:
        return [TaskSpec.from_kind(kind, self.num_classes) for kind in self.tasks]


def _format_errors(error: ValidationError):
    return "；".join(
        f"{'.'.join(str(loc) for loc in item['loc']) or '配置'}: {item['msg']}" for item in error.errors()
    )


def make_config(**values) -> RunConfig:
    """ 构造配置，校验失败统一转成 ConfigError """
    try:
        return RunConfig(**values)
    except ValidationError as error:
        raise ConfigError(f"配置不合法：{_format_errors(error)}")


def update_config(cfg: RunConfig, **values) -> RunConfig:
    return make_config(**{**cfg.model_dump(exclude_none=True), **values})


def parse_config_text(text) -> RunConfig:
    values = {}
    for number, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"第 {number} 行不是 key=value 格式：{line}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in RunConfig.model_fields:
            raise ConfigError(f"第 {number} 行是未知配置项：{key}")
        if key in values:
            raise ConfigError(f"第 {number} 行重复配置：{key}")
        values[key] = value
    return make_config(**values)


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(item) for item in value)
    return str(getattr(value, "value", value))


def format_config(cfg: RunConfig) -> str:
    lines = [f"{key}={_format_value(value)}" for key, value in cfg if value is not None]
    return "\n".join(lines) + "\n"


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fp:
            text = fp.read()
    except OSError as error:
        raise ConfigError(f"读取配置文件失败：{path}，{error}")
    return parse_config_text(text)


def dump_config(cfg: RunConfig, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fp:
        fp.write(format_config(cfg))
    return path
