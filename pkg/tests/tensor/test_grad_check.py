# -*- coding: utf-8 -*-
import numpy as np
import pytest

from apps.tensor import ops
from apps.tensor.grad_check import finite_difference_grad, gradient_check, jitter_zero_parameters, relative_error
from apps.tensor.layers import Linear
from apps.tensor.tensor import Tensor, make_result
from utils.exceptions import OracleError


class TestFiniteDifference:

    def test_sum_gives_ones(self, rng):
        x = Tensor(rng.standard_normal(6))
        grad = finite_difference_grad(lambda t: ops.sum(t), x)
        assert np.abs(grad.data - 1.0).max() <= 1e-9

    def test_square(self):
        x = Tensor([3.0])
        grad = finite_difference_grad(lambda t: ops.sum(ops.mul(t, t)), x)
        assert abs(grad.data[0] - 6.0) <= 1e-6

    def test_coordinate_subset(self):
        x = Tensor([1.0, 2.0, 3.0])
        grad = finite_difference_grad(lambda t: ops.sum(ops.mul(t, t)), x, coords=[2])
        assert grad.data[0] == 0.0 and abs(grad.data[2] - 6.0) <= 1e-6

    def test_requires_float64(self):
        with pytest.raises(OracleError):
            finite_difference_grad(lambda t: ops.sum(t), Tensor(np.ones(2, dtype=np.float32)))

    def test_restores_input(self, rng):
        data = rng.standard_normal(4)
        x = Tensor(data.copy())
        finite_difference_grad(lambda t: ops.sum(ops.exp(t)), x)
        assert np.array_equal(x.data, data)


class TestGradientCheck:

    def test_detects_wrong_gradient(self, rng):
        def broken_square(t):
            return make_result("broken", t.data * t.data, (t,), lambda g: (g * t.data,))

        x = Tensor(rng.standard_normal(5), requires_grad=True)
        report = gradient_check(lambda: ops.sum(broken_square(x)), [("x", x)], rng=rng)
        assert not report.passed
        assert report.worst.startswith("x[")

    def test_samples_at_most_n_coords(self, rng):
        x = Tensor(rng.standard_normal(300), requires_grad=True)
        report = gradient_check(lambda: ops.sum(ops.exp(x)), [("x", x)], n_coords=100, rng=rng)
        assert report.checked == 100 and report.passed

    def test_relative_error_floor(self):
        assert relative_error(0.0, 1e-9) == pytest.approx(1e-4)
        assert relative_error(2.0, 1.0) == 0.5


class TestJitter:

    def test_only_zero_parameters_change(self, rng):
        layer = Linear(3, 2, zero_init=True).reset_parameters(0)
        norm_bias = Linear(3, 2).reset_parameters(0)
        before = norm_bias.weight.data.copy()
        jitter_zero_parameters(layer, rng)
        jitter_zero_parameters(norm_bias, rng)
        assert layer.weight.data.any() and layer.bias.data.any()
        assert np.array_equal(norm_bias.weight.data, before)
