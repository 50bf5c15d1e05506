# -*- coding: utf-8 -*-
"""
训练循环：前向 -> 各任务损失加权求和 -> 反传 -> AdamW + 多项式学习率。
每步写一行 JSONL {iter, lr, losses, total}；定期保存 last_good，验证损失最好时保存 best，结束保存 final。
"""
import os
from typing import Dict, Optional

import numpy as np
from pydantic import BaseModel as pydanticBaseModel, Field

from apps.decoder.checkpoint import save_checkpoint
from apps.decoder.model import MTMamba
from apps.harness.forms import RunConfig, dump_config
from apps.harness.optim import AdamWState, adamw_step, poly_lr
from apps.harness.presets import build_model
from apps.harness.synthetic import dataset_exists, generate_dataset, load_dataset, task_targets
from apps.tasks.losses import task_loss
from apps.tensor import ops
from apps.tensor.tensor import Tensor, backward, no_grad, reset_tape
from config import (
    best_checkpoint_name, config_file_name, final_checkpoint_name, last_good_checkpoint_name, metrics_log_name
)
from utils.exceptions import NumericDomainError, OptimizerError, TrainingDivergedError
from utils.logs.log import logger
from utils.util.file_util import FileUtil
from utils.util.json_util import JsonUtil

_BATCH_STREAM = 1
_VAL_BATCH = 8


class TrainResult(pydanticBaseModel):
    out_dir: str = Field(..., title="产物目录")
    final_checkpoint: str = Field(..., title="最终权重")
    best_checkpoint: Optional[str] = Field(None, title="验证损失最好的权重")
    metrics_log: str = Field(..., title="JSONL 日志")
    initial_loss: float = Field(..., title="第一步的总损失")
    final_loss: float = Field(..., title="最后一步的总损失")
    best_val_loss: Optional[float] = Field(None, title="最好的验证损失")


def batch_indices(seed, iteration, count, batch_size):
    """ 第 iteration 步的样本下标只由 (seed, iteration) 决定 """
    rng = np.random.default_rng([int(seed), _BATCH_STREAM, int(iteration)])
    return np.sort(rng.choice(count, size=batch_size, replace=batch_size > count))


def compute_losses(model: MTMamba, arrays: Dict[str, np.ndarray], index, weights):
    """ 返回 ({任务名: 损失}, 加权总损失) """
    outputs = model(Tensor(arrays["image"][index], dtype=model.dtype))
    targets = task_targets(arrays, index)
    losses = {task.name: task_loss(task, outputs[task.name], targets) for task in model.tasks}
    total = None
    for (_, loss), weight in zip(losses.items(), weights):
        term = ops.mul(loss, float(weight))
        total = term if total is None else ops.add(total, term)
    return losses, total


def validation_loss(model: MTMamba, arrays: Dict[str, np.ndarray], weights) -> float:
    count = arrays["image"].shape[0]
    total, seen = 0.0, 0
    with no_grad():
        for start in range(0, count, _VAL_BATCH):
            index = np.arange(start, min(count, start + _VAL_BATCH))
            _, loss = compute_losses(model, arrays, index, weights)
            total += loss.item() * len(index)
            seen += len(index)
    return total / seen


def prepare_dataset(cfg: RunConfig):
    if not dataset_exists(cfg.data_dir):
        logger.info(f"数据集不存在，按配置生成：{cfg.data_dir}")
        generate_dataset(cfg, out_dir=cfg.data_dir)
    return load_dataset(cfg.data_dir)


def train(cfg: RunConfig) -> TrainResult:
    out_dir = cfg.out_dir
    FileUtil.check_dir(out_dir)
    dump_config(cfg, os.path.join(out_dir, config_file_name))
    metrics_path = os.path.join(out_dir, metrics_log_name)
    FileUtil.delete_file(metrics_path)
    last_good = os.path.join(out_dir, last_good_checkpoint_name)
    best_path = os.path.join(out_dir, best_checkpoint_name)

    dataset = prepare_dataset(cfg)
    train_arrays, val_arrays = dataset["train"], dataset["val"]
    model = build_model(cfg)
    params = list(model.named_parameters())
    state = AdamWState()
    weights = cfg.weights
    save_checkpoint(last_good, model)
    logger.info(f"开始训练：{len(cfg.tasks)} 个任务，{model.num_parameters()} 个参数，{cfg.iterations} 步")

    initial_loss = final_loss = None
    best_val, best_checkpoint = None, None
    for iteration in range(cfg.iterations):
        reset_tape()
        lr_t = poly_lr(iteration, cfg.iterations, cfg.lr, cfg.poly_power)
        index = batch_indices(cfg.seed, iteration, train_arrays["image"].shape[0], cfg.batch_size)
        try:
            model.zero_grad()
            losses, total = compute_losses(model, train_arrays, index, weights)
            backward(total)
            adamw_step(params, state, lr_t, cfg.betas, cfg.eps, cfg.weight_decay)
        except (NumericDomainError, OptimizerError) as error:
            reset_tape()
            logger.error(f"第 {iteration} 步训练发散：{error}，保留 {last_good}")
            raise TrainingDivergedError(f"第 {iteration} 步训练发散：{error}", last_good)

        final_loss = total.item()
        initial_loss = final_loss if initial_loss is None else initial_loss
        JsonUtil.append_line(metrics_path, {
            "iter": iteration,
            "lr": lr_t,
            "losses": {name: loss.item() for name, loss in losses.items()},
            "total": final_loss,
        })

        step = iteration + 1
        if step % cfg.save_every == 0:
            save_checkpoint(last_good, model)
        if step % cfg.eval_every == 0 or step == cfg.iterations:
            val = validation_loss(model, val_arrays, weights)
            logger.info(f"iter {step}/{cfg.iterations} lr={lr_t:.3e} loss={final_loss:.4f} val={val:.4f}")
            if best_val is None or val < best_val:
                best_val, best_checkpoint = val, save_checkpoint(best_path, model)

    final_path = save_checkpoint(os.path.join(out_dir, final_checkpoint_name), model)
    logger.info(f"训练结束，权重保存在 {final_path}")
    return TrainResult(
        out_dir=out_dir,
        final_checkpoint=final_path,
        best_checkpoint=best_checkpoint,
        metrics_log=metrics_path,
        initial_loss=initial_loss,
        final_loss=final_loss,
        best_val_loss=best_val,
    )
