# -*- coding: utf-8 -*-
import numpy as np
import pytest

from apps.ssm.params import SSMParams, default_dt_rank
from apps.ssm.s6 import s6_forward
from apps.ssm.scan import NAIVE, ScanConfig
from apps.tensor.grad_check import gradient_check
from apps.tensor import ops
from apps.tensor.tensor import Tensor, no_grad
from utils.exceptions import ConfigError, ShapeError


def _softplus(x):
    return np.logaddexp(0.0, x)


def _step_by_step(x, params):
    """ 直接按定义逐步递推 """
    A = -np.exp(params.A_log.data)
    batch, length, channels = x.shape
    y = np.zeros_like(x)
    for b in range(batch):
        h = np.zeros_like(A)
        for l in range(length):
            token = x[b, l]
            B = token @ params.b_proj.weight.data + params.b_proj.bias.data
            C = token @ params.c_proj.weight.data + params.c_proj.bias.data
            delta = _softplus(token @ params.dt_down.weight.data @ params.dt_up.weight.data + params.delta_bias.data)
            h = np.exp(delta[:, None] * A) * h + delta[:, None] * B[None, :] * token[:, None]
            y[b, l] = h @ C + params.D * token
    return y


class TestSSMParams:

    def test_init(self):
        params = SSMParams(20, 4).reset_parameters(0)
        assert params.dt_rank == default_dt_rank(20) == 2
        assert np.allclose(-np.exp(params.A_log.data[0]), [-1.0, -2.0, -3.0, -4.0])
        delta = _softplus(params.delta_bias.data)
        assert ((delta >= 1e-3 - 1e-12) & (delta <= 1e-1 + 1e-12)).all()
        assert not params.D.any()
        assert "D" not in params.parameter_names()

    def test_invalid_sizes(self):
        with pytest.raises(ConfigError):
            SSMParams(0, 4)


class TestS6:

    def test_matches_step_by_step(self, rng):
        params = SSMParams(3, 4).reset_parameters(1)
        x = rng.standard_normal((2, 9, 3))
        with no_grad():
            for cfg in (NAIVE, ScanConfig(chunk_len=4)):
                y = s6_forward(Tensor(x), params, cfg).data
                assert np.allclose(y, _step_by_step(x, params), rtol=1e-10, atol=1e-12)

    def test_zero_readout_gives_zero(self, rng):
        params = SSMParams(3, 2).reset_parameters(0)
        params.c_proj.weight.data[:] = 0.0
        params.c_proj.bias.data[:] = 0.0
        assert not s6_forward(Tensor(rng.standard_normal((1, 5, 3))), params).data.any()

    def test_time_invariant_superposition(self, rng):
        """ B、C、Δ 不依赖输入时 S6 退化为线性时不变系统 """
        params = SSMParams(3, 2).reset_parameters(0)
        for layer in (params.b_proj, params.c_proj, params.dt_down):
            layer.weight.data[:] = 0.0
        x1, x2 = rng.standard_normal((1, 6, 3)), rng.standard_normal((1, 6, 3))
        with no_grad():
            y1 = s6_forward(Tensor(x1), params).data
            y2 = s6_forward(Tensor(x2), params).data
            y12 = s6_forward(Tensor(2.0 * x1 + x2), params).data
        assert np.allclose(y12, 2.0 * y1 + y2, rtol=1e-10, atol=1e-12)

    def test_skip_term(self, rng):
        params = SSMParams(3, 2).reset_parameters(0)
        x = rng.standard_normal((1, 5, 3))
        without = s6_forward(Tensor(x), params).data
        params.D = np.array([1.0, 0.0, -2.0])
        with_skip = s6_forward(Tensor(x), params).data
        assert np.allclose(with_skip - without, x * params.D, rtol=1e-12, atol=1e-12)

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError):
            s6_forward(Tensor(np.ones((1, 4, 2))), SSMParams(3, 2).reset_parameters(0))

    def test_gradient(self, rng):
        params = SSMParams(3, 2).reset_parameters(0)
        x = Tensor(rng.standard_normal((1, 7, 3)), requires_grad=True)
        projection = Tensor(rng.standard_normal((1, 7, 3)) / np.sqrt(21))
        tensors = [("x", x)] + list(params.named_parameters())
        report = gradient_check(
            lambda: ops.sum(ops.mul(s6_forward(x, params, ScanConfig(chunk_len=4)), projection)), tensors, rng=rng
        )
        assert report.passed, report
