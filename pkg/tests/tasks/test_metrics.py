# -*- coding: utf-8 -*-
import numpy as np
import pytest

from apps.enums import TaskKindEnum
from apps.tasks.metrics import (
    ConfusionMatrix, F1Accumulator, RmseAccumulator, accumulate, make_accumulator, metric_f1, metric_merr, metric_miou,
    metric_rmse
)
from apps.tasks.task_spec import TaskSpec


class TestMiou:

    def test_perfect(self):
        labels = np.array([[0, 1], [2, 2]])
        assert metric_miou(labels, labels, 3) == 1.0

    def test_disjoint(self):
        assert metric_miou(np.array([1, 1, 0, 0]), np.array([0, 0, 1, 1]), 2) == 0.0

    def test_hand_case(self):
        assert metric_miou(np.array([0, 1, 1, 1]), np.array([0, 0, 1, 1]), 2) == pytest.approx((0.5 + 2.0 / 3.0) / 2)

    def test_permutation_invariant(self, rng):
        gt = rng.integers(0, 4, size=200)
        pred = np.where(rng.random(200) < 0.7, gt, rng.integers(0, 4, size=200))
        perm = np.array([2, 0, 3, 1])
        assert metric_miou(perm[pred], perm[gt], 4) == pytest.approx(metric_miou(pred, gt, 4), rel=1e-12)

    def test_ignore_and_absent_classes(self):
        matrix = ConfusionMatrix(4).update(np.array([0, 1, 3]), np.array([0, 1, 255]))
        assert matrix.matrix.sum() == 2
        assert matrix.value() == 1.0

    def test_merge(self, rng):
        gt, pred = rng.integers(0, 3, size=50), rng.integers(0, 3, size=50)
        merged = ConfusionMatrix(3).update(pred[:20], gt[:20]).merge(ConfusionMatrix(3).update(pred[20:], gt[20:]))
        assert np.array_equal(merged.matrix, ConfusionMatrix(3).update(pred, gt).matrix)


class TestRegressionMetrics:

    def test_rmse(self):
        assert metric_rmse(np.full((2, 2), 3.0), np.ones((2, 2))) == 2.0
        assert metric_rmse(np.array([1.0, 9.0]), np.array([1.0, 0.0]), np.array([True, False])) == 0.0

    def test_rmse_merge(self):
        merged = RmseAccumulator().update([3.0], [1.0]).merge(RmseAccumulator().update([1.0], [1.0]))
        assert merged.value() == pytest.approx(np.sqrt(2.0))

    def test_merr(self):
        up = np.array([[0.0, 0.0, 1.0]])
        assert metric_merr(up, up) == 0.0
        assert metric_merr(-up, up) == pytest.approx(180.0)
        assert metric_merr(np.array([[1.0, 0.0, 0.0]]), up) == pytest.approx(90.0)
        assert metric_merr(np.array([[0.0, 0.0, 5.0]]), up) == 0.0

    def test_merr_skips_zero_vectors(self):
        pred = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
        gt = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
        assert metric_merr(pred, gt) == 0.0


class TestF1:

    def test_values(self):
        assert metric_f1(np.array([1, 1, 0, 0]), np.array([1, 0, 1, 0])) == 0.5
        assert metric_f1(np.zeros(4), np.zeros(4)) == 1.0
        assert metric_f1(np.ones(4), np.zeros(4)) == 0.0

    def test_merge(self):
        merged = F1Accumulator().update([1, 0], [1, 1]).merge(F1Accumulator().update([1], [0]))
        assert (merged.tp, merged.fp, merged.fn) == (1, 1, 1)


class TestAccumulate:

    def test_segmentation_uses_argmax(self):
        spec = TaskSpec.from_kind(TaskKindEnum.segmentation, 2)
        logits = np.array([[[[2.0, 1.0], [0.0, 3.0]]]])
        accumulator = accumulate(spec, make_accumulator(spec), logits, {"segmentation": np.array([[[0.0, 1.0]]])})
        assert accumulator.value() == 1.0

    def test_boundary_thresholds_logits(self):
        spec = TaskSpec.from_kind(TaskKindEnum.boundary)
        logits = np.array([[[[0.5], [-0.5], [2.0]]]])
        accumulator = accumulate(spec, make_accumulator(spec), logits, {"boundary": np.array([[[1.0, 0.0, 0.0]]])})
        assert (accumulator.tp, accumulator.fp, accumulator.fn) == (1, 1, 0)

    def test_depth_masks_missing(self):
        spec = TaskSpec.from_kind(TaskKindEnum.depth)
        pred = np.array([[[[2.0], [7.0]]]])
        accumulator = accumulate(spec, make_accumulator(spec), pred, {"depth": np.array([[[1.0, 0.0]]])})
        assert accumulator.value() == 1.0
