# -*- coding: utf-8 -*-
"""
评估指标。每种指标一个累加器，update 累加一个 batch，merge 合并别的 worker 的结果，
value 给出最终数值；同时提供一次性计算的函数版本。
"""
from typing import Mapping

import numpy as np

from apps.enums import MetricKindEnum, TaskKindEnum
from apps.tasks.losses import _as_array, _as_labels, depth_mask, normal_mask
from apps.tasks.task_spec import TaskSpec
from config import ignore_label


class ConfusionMatrix:
    """ K×K 混淆矩阵，行是 gt，列是预测 """

    def __init__(self, num_classes, ignore=ignore_label):
        self.num_classes = num_classes
        self.ignore = ignore
        self.matrix = np.zeros((num_classes, num_classes), dtype=np.int64)

    def update(self, pred_labels, gt_labels):
        pred, gt = _as_labels(pred_labels).reshape(-1), _as_labels(gt_labels).reshape(-1)
        keep = (gt != self.ignore) & (gt >= 0) & (gt < self.num_classes) & (pred >= 0) & (pred < self.num_classes)
        index = gt[keep] * self.num_classes + pred[keep]
        self.matrix += np.bincount(index, minlength=self.num_classes ** 2).reshape(self.num_classes, self.num_classes)
        return self

    def merge(self, other: "ConfusionMatrix"):
        self.matrix += other.matrix
        return self

    def per_class_iou(self):
        tp = np.diag(self.matrix).astype(np.float64)
        union = self.matrix.sum(axis=0) + self.matrix.sum(axis=1) - tp
        return np.divide(tp, union, out=np.zeros_like(tp), where=union > 0)

    def value(self):
        """ 只对 gt 里出现过的类别求平均 """
        present = self.matrix.sum(axis=1) > 0
        if not present.any():
            return 0.0
        return float(self.per_class_iou()[present].mean())


class RmseAccumulator:

    def __init__(self):
        self.squared = 0.0
        self.count = 0

    def update(self, pred, gt, mask=None):
        diff = (_as_array(pred).astype(np.float64) - _as_array(gt).astype(np.float64)).reshape(-1)
        valid = np.ones(diff.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool).reshape(-1)
        self.squared += float(np.sum(diff[valid] ** 2))
        self.count += int(valid.sum())
        return self

    def merge(self, other: "RmseAccumulator"):
        self.squared += other.squared
        self.count += other.count
        return self

    def value(self):
        return float(np.sqrt(self.squared / self.count)) if self.count else 0.0


class AngularErrorAccumulator:
    """ 平均角度误差（度），预测和 gt 先各自 L2 归一化，任一方为零向量的像素视为无效 """

    def __init__(self):
        self.total = 0.0
        self.count = 0

    def update(self, pred_normals, gt_normals, mask=None):
        pred = _as_array(pred_normals).astype(np.float64).reshape(-1, 3)
        gt = _as_array(gt_normals).astype(np.float64).reshape(-1, 3)
        pred_norm = np.linalg.norm(pred, axis=-1)
        gt_norm = np.linalg.norm(gt, axis=-1)
        valid = (pred_norm > 0) & (gt_norm > 0)
        if mask is not None:
            valid &= np.asarray(mask, dtype=bool).reshape(-1)
        cos = np.sum(pred[valid] * gt[valid], axis=-1) / (pred_norm[valid] * gt_norm[valid])
        self.total += float(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))).sum())
        self.count += int(valid.sum())
        return self

    def merge(self, other: "AngularErrorAccumulator"):
        self.total += other.total
        self.count += other.count
        return self

    def value(self):
        return self.total / self.count if self.count else 0.0


class F1Accumulator:
    """ 逐像素 F1，logit > 0（即 sigmoid > 0.5）判为正；预测和 gt 都没有正样本时记为 1 """

    def __init__(self):
        self.tp = 0
        self.fp = 0
        self.fn = 0

    def update(self, pred_binary, gt_binary):
        pred = np.asarray(pred_binary, dtype=bool).reshape(-1)
        gt = np.asarray(gt_binary, dtype=bool).reshape(-1)
        self.tp += int(np.sum(pred & gt))
        self.fp += int(np.sum(pred & ~gt))
        self.fn += int(np.sum(~pred & gt))
        return self

    def merge(self, other: "F1Accumulator"):
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        return self

    def value(self):
        denominator = 2 * self.tp + self.fp + self.fn
        return 2.0 * self.tp / denominator if denominator else 1.0


def threshold_logits(logits):
    return _as_array(logits) > 0


def metric_miou(pred_labels, gt_labels, num_classes, ignore=ignore_label):
    return ConfusionMatrix(num_classes, ignore).update(pred_labels, gt_labels).value()


def metric_rmse(pred, gt, mask=None):
    return RmseAccumulator().update(pred, gt, mask).value()


def metric_merr(pred_normals, gt_normals, mask=None):
    return AngularErrorAccumulator().update(pred_normals, gt_normals, mask).value()


def metric_f1(pred_binary, gt_binary):
    return F1Accumulator().update(pred_binary, gt_binary).value()


def make_accumulator(spec: TaskSpec):
    return {
        MetricKindEnum.miou: lambda: ConfusionMatrix(spec.out_channels),
        MetricKindEnum.rmse: RmseAccumulator,
        MetricKindEnum.merr: AngularErrorAccumulator,
        MetricKindEnum.f1: F1Accumulator,
    }[spec.metric]()


def accumulate(spec: TaskSpec, accumulator, output, targets: Mapping[str, np.ndarray]):
    """ 把模型原始输出转换成指标需要的形式后累加 """
    output = _as_array(output)
    target = targets[spec.kind.value]
    if spec.kind == TaskKindEnum.segmentation:
        return accumulator.update(output.argmax(axis=-1), target)
    if spec.kind == TaskKindEnum.boundary:
        return accumulator.update(threshold_logits(output[..., 0]), _as_array(target) > 0.5)
    if spec.kind == TaskKindEnum.depth:
        return accumulator.update(output[..., 0], target, depth_mask(target))
    return accumulator.update(output, target, normal_mask(target))
