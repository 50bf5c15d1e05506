# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest
from pydantic import ValidationError

from apps.enums import LossKindEnum, MetricKindEnum, TaskKindEnum
from apps.tasks.heads import TaskHead, head_forward
from apps.tasks.losses import binary_cross_entropy, cross_entropy, l1_loss, task_loss
from apps.tasks.task_spec import TaskSpec
from apps.tensor.grad_check import gradient_check
from apps.tensor.tensor import Tensor
from utils.exceptions import DataError, ShapeError


class TestTaskSpec:

    def test_defaults_by_kind(self):
        depth = TaskSpec.from_kind(TaskKindEnum.depth)
        assert (depth.loss, depth.metric, depth.higher_is_better, depth.out_channels) == (
            LossKindEnum.l1, MetricKindEnum.rmse, False, 1
        )
        seg = TaskSpec.from_kind("segmentation", 5)
        assert (seg.loss, seg.metric, seg.higher_is_better, seg.out_channels) == (
            LossKindEnum.cross_entropy, MetricKindEnum.miou, True, 5
        )
        assert TaskSpec.from_kind(TaskKindEnum.normal).out_channels == 3
        assert TaskSpec.from_kind(TaskKindEnum.boundary).metric == MetricKindEnum.f1

    def test_invalid_specs(self):
        with pytest.raises(ValidationError):
            TaskSpec(name="seg", kind=TaskKindEnum.segmentation)
        with pytest.raises(ValidationError):
            TaskSpec(name="normal", kind=TaskKindEnum.normal, out_channels=2)


class TestCrossEntropy:

    def test_uniform_logits(self):
        loss = cross_entropy(Tensor(np.zeros((2, 3, 4))), np.array([[0, 1, 2], [3, 0, 1]]))
        assert math.isclose(loss.item(), math.log(4.0), rel_tol=1e-12)

    def test_confident_prediction(self):
        loss = cross_entropy(Tensor([[100.0, 0.0, 0.0]]), np.array([0]))
        assert 0.0 <= loss.item() <= 1e-40

    def test_ignored_pixels(self):
        logits = np.zeros((1, 2, 3))
        logits[0, 1] = [50.0, -50.0, 0.0]
        loss = cross_entropy(Tensor(logits), np.array([[0, 255]]))
        assert math.isclose(loss.item(), math.log(3.0), rel_tol=1e-12)

    def test_label_errors(self):
        with pytest.raises(DataError):
            cross_entropy(Tensor(np.zeros((2, 3))), np.array([0, 3]))
        with pytest.raises(DataError):
            cross_entropy(Tensor(np.zeros((2, 3))), np.array([255, 255]))
        with pytest.raises(DataError):
            cross_entropy(Tensor(np.zeros((1, 3))), np.array([0.5]))
        with pytest.raises(ShapeError):
            cross_entropy(Tensor(np.zeros((2, 3))), np.array([0, 1, 2]))

    def test_gradient(self, rng):
        logits = Tensor(rng.standard_normal((2, 3, 4)), requires_grad=True)
        labels = np.array([[0, 255, 3], [1, 2, 2]])
        report = gradient_check(lambda: cross_entropy(logits, labels), [("logits", logits)], rng=rng)
        assert report.passed, report


class TestBinaryCrossEntropy:

    def test_zero_logit(self):
        loss = binary_cross_entropy(Tensor(np.zeros((2, 2, 1))), np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert math.isclose(loss.item(), math.log(2.0), rel_tol=1e-12)

    def test_gradient(self, rng):
        logits = Tensor(3.0 * rng.standard_normal((2, 3, 1)), requires_grad=True)
        targets = (rng.random((2, 3)) > 0.5).astype(np.float64)
        report = gradient_check(lambda: binary_cross_entropy(logits, targets), [("logits", logits)], rng=rng)
        assert report.passed, report


class TestL1:

    def test_zero_and_offset(self):
        target = np.full((2, 3, 1), 1.5)
        assert l1_loss(Tensor(target.copy()), target).item() == 0.0
        assert l1_loss(Tensor(target + 0.25), target).item() == pytest.approx(0.25, rel=1e-12)

    def test_mask_without_channel_axis(self):
        pred = Tensor(np.array([[[1.0], [5.0]]]))
        target = np.array([[[0.0], [0.0]]])
        assert l1_loss(pred, target, np.array([[True, False]])).item() == 1.0

    def test_empty_mask(self):
        with pytest.raises(DataError):
            l1_loss(Tensor(np.ones((1, 2, 1))), np.zeros((1, 2, 1)), np.zeros((1, 2), dtype=bool))


class TestTaskLoss:

    def test_depth_ignores_missing_pixels(self):
        spec = TaskSpec.from_kind(TaskKindEnum.depth)
        targets = {"depth": np.array([[[2.0, 0.0]]])}
        loss = task_loss(spec, Tensor(np.array([[[[1.0], [9.0]]]])), targets)
        assert loss.item() == 1.0

    def test_segmentation_dispatch(self):
        spec = TaskSpec.from_kind(TaskKindEnum.segmentation, 4)
        loss = task_loss(spec, Tensor(np.zeros((1, 1, 2, 4))), {"segmentation": np.array([[[1.0, 2.0]]], dtype=np.float32)})
        assert math.isclose(loss.item(), math.log(4.0), rel_tol=1e-12)


class TestTaskHead:

    def test_shapes(self, rng):
        head = TaskHead(4, TaskSpec.from_kind(TaskKindEnum.segmentation, 3)).reset_parameters(0)
        assert head_forward(Tensor(rng.standard_normal((1, 2, 2, 4))), head).shape == (1, 8, 8, 3)
        assert head.out.bias is not None and head.expand.proj.bias is None

    def test_channel_mismatch(self):
        head = TaskHead(4, TaskSpec.from_kind(TaskKindEnum.depth))
        with pytest.raises(ShapeError):
            head(Tensor(np.ones((1, 2, 2, 8))))
