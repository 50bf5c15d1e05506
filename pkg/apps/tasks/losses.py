# -*- coding: utf-8 -*-
"""
任务损失。标签/目标都是 numpy 数组（或不需要梯度的 Tensor），只对预测求导。
"""
from typing import Mapping

import numpy as np

from apps.enums import TaskKindEnum
from apps.tasks.task_spec import TaskSpec
from apps.tensor.tensor import Tensor, make_result
from config import ignore_label
from utils.exceptions import DataError, ShapeError


def _as_array(value):
    return value.data if isinstance(value, Tensor) else np.asarray(value)


def _as_labels(labels):
    labels = _as_array(labels)
    rounded = np.rint(labels)
    if not np.array_equal(rounded, labels):
        raise DataError("标签必须是整数")
    return rounded.astype(np.int64)


def cross_entropy(logits: Tensor, labels, ignore=ignore_label) -> Tensor:
    """ 对未忽略像素取 -log softmax(logits)[label] 的均值，减最大值保证数值稳定 """
    labels = _as_labels(labels)
    classes = logits.shape[-1]
    if labels.shape != logits.shape[:-1]:
        raise ShapeError(f"cross_entropy: logits {logits.shape} 和标签 {labels.shape} 不匹配")
    valid = labels != ignore
    bad = valid & ((labels < 0) | (labels >= classes))
    if bad.any():
        raise DataError(f"标签越界：类别数 {classes}，出现 {sorted(set(labels[bad].tolist()))[:5]}")
    count = int(valid.sum())
    if count == 0:
        raise DataError("cross_entropy: 没有有效像素")

    shifted = logits.data - logits.data.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    total = exp.sum(axis=-1, keepdims=True)
    safe = np.where(valid, labels, 0)
    picked = np.take_along_axis(shifted, safe[..., None], axis=-1)[..., 0]
    nll = (np.log(total[..., 0]) - picked) * valid
    loss = np.asarray(nll.sum() / count, dtype=logits.data.dtype)

    def backward(grad):
        probs = exp / total
        np.put_along_axis(probs, safe[..., None], np.take_along_axis(probs, safe[..., None], axis=-1) - 1.0, axis=-1)
        return (probs * valid[..., None] * (grad / count),)

    return make_result("cross_entropy", loss, (logits,), backward)


def binary_cross_entropy(logits: Tensor, targets) -> Tensor:
    """ 单通道 logits 的二分类交叉熵：max(z,0) - z·y + log(1+e^{-|z|}) """
    targets = _as_array(targets).astype(logits.data.dtype)
    if logits.shape[-1] != 1 or targets.shape != logits.shape[:-1]:
        raise ShapeError(f"binary_cross_entropy: logits {logits.shape} 和目标 {targets.shape} 不匹配")
    if not np.isin(targets, (0.0, 1.0)).all():
        raise DataError("二分类目标只能是 0 或 1")
    z = logits.data[..., 0]
    count = z.size
    loss = np.asarray(
        (np.maximum(z, 0) - z * targets + np.log1p(np.exp(-np.abs(z)))).sum() / count, dtype=logits.data.dtype
    )

    def backward(grad):
        sig = np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))
        return (((sig - targets) * (grad / count))[..., None],)

    return make_result("binary_cross_entropy", loss, (logits,), backward)


def l1_loss(pred: Tensor, target, mask=None) -> Tensor:
    """ 有效位置上 |pred - target| 的均值；mask 可以和 pred 同形状，也可以少最后一维 """
    target = _as_array(target).astype(pred.data.dtype)
    if target.shape != pred.shape:
        raise ShapeError(f"l1_loss: 预测 {pred.shape} 和目标 {target.shape} 形状不一致")
    if mask is None:
        mask = np.ones(pred.shape, dtype=bool)
    else:
        mask = _as_array(mask).astype(bool)
        if mask.shape == pred.shape[:-1]:
            mask = np.broadcast_to(mask[..., None], pred.shape)
        elif mask.shape != pred.shape:
            raise ShapeError(f"l1_loss: mask {mask.shape} 和预测 {pred.shape} 不匹配")
    count = int(mask.sum())
    if count == 0:
        raise DataError("l1_loss: 没有有效位置")
    diff = pred.data - target
    loss = np.asarray((np.abs(diff) * mask).sum() / count, dtype=pred.data.dtype)

    def backward(grad):
        return (np.sign(diff) * mask * (grad / count),)

    return make_result("l1_loss", loss, (pred,), backward)


def depth_mask(depth):
    return _as_array(depth) > 0


def normal_mask(normal):
    return np.linalg.norm(_as_array(normal), axis=-1) > 0


def task_loss(spec: TaskSpec, output: Tensor, targets: Mapping[str, np.ndarray]) -> Tensor:
    """ targets 按任务类型取：segmentation / depth / normal / boundary """
    target = targets[spec.kind.value]
    if spec.kind == TaskKindEnum.segmentation:
        return cross_entropy(output, target)
    if spec.kind == TaskKindEnum.boundary:
        return binary_cross_entropy(output, target)
    if spec.kind == TaskKindEnum.depth:
        return l1_loss(output, _as_array(target)[..., None], depth_mask(target))
    return l1_loss(output, target, normal_mask(target))
