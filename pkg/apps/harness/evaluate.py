# -*- coding: utf-8 -*-
"""
在某个数据划分上评估权重文件。样本按下标切成连续的几段交给线程池，
每段得到一组累加器，最后按段的顺序合并，结果和线程数无关。
"""
import os
from typing import Optional

import numpy as np

from apps.decoder.checkpoint import load_checkpoint
from apps.decoder.model import MTMamba
from apps.harness.forms import RunConfig, load_config
from apps.harness.presets import build_model
from apps.harness.synthetic import load_dataset, task_targets
from apps.tasks.metrics import accumulate, make_accumulator
from apps.tasks.report import MetricReport, with_delta_m
from apps.tensor.tensor import Tensor, no_grad
from config import config_file_name
from utils.exceptions import ConfigError, DataError
from utils.logs.log import logger
from utils.util.file_util import FileUtil
from utils.util.pool_util import chunk_indices, ordered_map, worker_count

_EVAL_BATCH = 8


def config_for_checkpoint(checkpoint) -> RunConfig:
    """ 训练时 run.cfg 和权重文件放在同一个目录 """
    path = os.path.join(os.path.dirname(os.path.abspath(checkpoint)), config_file_name)
    if not os.path.exists(path):
        raise ConfigError(f"权重文件旁边没有 {config_file_name}，请用 --config 指定：{path}")
    return load_config(path)


def _evaluate_range(model: MTMamba, arrays, indices):
    accumulators = [make_accumulator(task) for task in model.tasks]
    with no_grad():
        for start in range(0, len(indices), _EVAL_BATCH):
            index = np.asarray(indices[start:start + _EVAL_BATCH])
            outputs = model(Tensor(arrays["image"][index], dtype=model.dtype))
            targets = task_targets(arrays, index)
            for task, accumulator in zip(model.tasks, accumulators):
                accumulate(task, accumulator, outputs[task.name], targets)
    return accumulators


def evaluate_model(model: MTMamba, arrays) -> MetricReport:
    count = arrays["image"].shape[0]
    ranges = [part for part in chunk_indices(count, worker_count()) if len(part)]
    parts = ordered_map(lambda part: _evaluate_range(model, arrays, part), ranges)
    merged = parts[0]
    for accumulators in parts[1:]:
        for total, part in zip(merged, accumulators):
            total.merge(part)
    report = MetricReport()
    for task, accumulator in zip(model.tasks, merged):
        report.add(task.name, task.metric, accumulator.value(), task.higher_is_better)
    return report


def load_baseline(path) -> MetricReport:
    return MetricReport.from_json(FileUtil.load_json(path))


def evaluate(checkpoint, data_dir, split="val", cfg: Optional[RunConfig] = None, baseline=None) -> MetricReport:
    """ baseline 可以是 MetricReport 或者它的 JSON 文件路径，给出时附带 Δm """
    cfg = cfg or config_for_checkpoint(checkpoint)
    dataset = load_dataset(data_dir)
    if split not in dataset:
        raise DataError(f"数据集里没有划分 {split}，可选：{sorted(dataset)}")
    model = load_checkpoint(checkpoint, build_model(cfg))
    logger.info(f"评估 {checkpoint}，划分 {split}，共 {dataset[split]['image'].shape[0]} 个样本")
    report = evaluate_model(model, dataset[split])
    if baseline is not None:
        baseline = baseline if isinstance(baseline, MetricReport) else load_baseline(baseline)
        report = with_delta_m(report, baseline)
    for name, item in report.tasks.items():
        logger.info(f"{name}: {item.metric}={item.value:.4f}")
    return report
