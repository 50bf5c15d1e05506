# -*- coding: utf-8 -*-
"""
解码器结构预设，对应 STM/CTM 对比实验的几种配置：
    single_task  单任务，每个 stage 2 个 STM，无 CTM
    stm1/2/3     多任务，每个 stage 1/2/3 个 STM，无 CTM
    stm2_ctm     多任务，每个 stage 2 个 STM + 1 个 CTM（默认结构）
"""
from typing import Dict

from apps.decoder.model import MTMamba
from apps.enums import PresetEnum, TaskKindEnum
from apps.harness.forms import RunConfig, update_config
from apps.tensor.tensor import default_dtype
from utils.exceptions import ConfigError

_PRESETS = {
    PresetEnum.single_task: dict(stm_per_stage=2, ctm_enabled=False),
    PresetEnum.stm1: dict(stm_per_stage=1, ctm_enabled=False),
    PresetEnum.stm2: dict(stm_per_stage=2, ctm_enabled=False),
    PresetEnum.stm3: dict(stm_per_stage=3, ctm_enabled=False),
    PresetEnum.stm2_ctm: dict(stm_per_stage=2, ctm_enabled=True),
}


def apply_preset(cfg: RunConfig, preset, task=None) -> RunConfig:
    """ single_task 只保留一个任务（默认第一个）；其余预设只改解码器结构 """
    preset = PresetEnum(preset)
    values = dict(_PRESETS[preset])
    if preset == PresetEnum.single_task:
        task = TaskKindEnum(task) if task is not None else cfg.tasks[0]
        if task not in cfg.tasks:
            raise ConfigError(f"任务 {task.value} 不在配置的任务列表里")
        values.update(tasks=[task], loss_weights=None)
    elif task is not None:
        raise ConfigError("只有 single_task 预设可以指定任务")
    return update_config(cfg, **values)


def build_model(cfg: RunConfig) -> MTMamba:
    """ 按配置构建模型并按 seed 初始化 """
    with default_dtype(cfg.dtype):
        model = MTMamba(
            cfg.task_specs(),
            cfg.width,
            stm_count=cfg.stm_per_stage,
            ctm_enabled=cfg.ctm_enabled,
            alpha=cfg.alpha,
            state_size=cfg.state_size,
            scan_cfg=cfg.scan,
            gate_mode=cfg.ctm_gate_mode,
        )
    return model.reset_parameters(cfg.seed)


def preset_parameter_counts(cfg: RunConfig) -> Dict[str, int]:
    return {preset.value: build_model(apply_preset(cfg, preset)).num_parameters() for preset in PresetEnum}


def count_parameters(model) -> int:
    return model.num_parameters()


def parameter_names(model):
    return model.parameter_names()
