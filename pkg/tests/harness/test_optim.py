# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest

from apps.harness.optim import AdamWState, adamw_step, poly_lr
from apps.tensor.tensor import Parameter
from utils.exceptions import OptimizerError, ScheduleError


def _param(value, grad=None):
    param = Parameter(np.array([value], dtype=np.float64))
    param.grad = None if grad is None else np.array([grad], dtype=np.float64)
    return param


class TestAdamW:

    def test_zero_gradient_only_decays(self):
        param = _param(1.0, 0.0)
        adamw_step([("p", param)], AdamWState(), 0.1, weight_decay=0.5)
        assert param.data[0] == pytest.approx(0.95, abs=1e-12)

    def test_first_step(self):
        param = _param(1.0, 2.0)
        state = adamw_step([("p", param)], AdamWState(), 0.1, weight_decay=0.0)
        assert state.step == 1
        assert param.data[0] == pytest.approx(1.0 - 0.1 * 2.0 / (2.0 + 1e-8), rel=1e-12)
        assert state.m["p"][0] == pytest.approx(0.2) and state.v["p"][0] == pytest.approx(0.004)

    def test_missing_gradient_counts_as_zero(self):
        param = _param(2.0)
        adamw_step([("p", param)], AdamWState(), 0.1, weight_decay=0.0)
        assert param.data[0] == 2.0

    def test_converges_on_quadratic(self):
        param = _param(0.0)
        state = AdamWState()
        for _ in range(400):
            param.grad = 2.0 * (param.data - 3.0)
            adamw_step([("p", param)], state, 0.05, weight_decay=0.0)
        assert abs(param.data[0] - 3.0) < 0.1

    def test_non_finite_gradient_updates_nothing(self):
        good, bad = _param(1.0, 1.0), _param(1.0, np.nan)
        state = AdamWState()
        with pytest.raises(OptimizerError) as error:
            adamw_step([("good", good), ("bad", bad)], state, 0.1)
        assert error.value.param_name == "bad"
        assert good.data[0] == 1.0 and state.step == 0

    def test_keeps_parameter_dtype(self):
        param = Parameter(np.ones(2, dtype=np.float32))
        param.grad = np.ones(2, dtype=np.float32)
        adamw_step([("p", param)], AdamWState(), 0.1)
        assert param.data.dtype == np.float32


class TestPolyLr:

    def test_values(self):
        assert poly_lr(0, 100, 0.1) == 0.1
        assert poly_lr(50, 100, 1.0) == pytest.approx(0.5 ** 0.9)
        assert poly_lr(50, 100, 1.0) == pytest.approx(0.5359, abs=1e-4)
        assert math.isclose(poly_lr(99, 100, 1.0, power=1.0), 0.01)

    @pytest.mark.parametrize("iteration, total", [(100, 100), (-1, 100), (0, 0)])
    def test_out_of_range(self, iteration, total):
        with pytest.raises(ScheduleError):
            poly_lr(iteration, total, 0.1)
