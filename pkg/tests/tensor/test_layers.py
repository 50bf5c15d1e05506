# -*- coding: utf-8 -*-
import numpy as np
import pytest

from apps.base_model import BaseModule
from apps.tensor.layers import DepthwiseConv2d, LayerNorm, Linear
from apps.tensor.tensor import Tensor
from utils.exceptions import CheckpointError, ConfigError


class _Pair(BaseModule):

    def __init__(self):
        self.first = Linear(3, 4)
        self.blocks = [Linear(4, 4), Linear(4, 2, bias=False)]
        self._hidden = Linear(2, 2)
        self.width = 4

    def forward(self, x):
        out = self.first(x)
        for block in self.blocks:
            out = block(out)
        return out


class _Single(BaseModule):

    def __init__(self):
        self.first = Linear(3, 4)

    def forward(self, x):
        return self.first(x)


class TestLinearLayer:

    def test_weight_layout(self):
        layer = Linear(3, 5)
        assert layer.weight.shape == (3, 5)
        assert layer.bias.shape == (5,)

    def test_zero_init(self):
        layer = Linear(3, 2, zero_init=True).reset_parameters(7)
        assert not layer.weight.data.any() and not layer.bias.data.any()
        y = layer(Tensor(np.ones((4, 3))))
        assert np.array_equal(y.data, np.zeros((4, 2)))

    def test_fan_in_bound(self):
        layer = Linear(16, 8).reset_parameters(0)
        assert np.abs(layer.weight.data).max() <= 0.25


class TestDepthwiseConvLayer:

    def test_even_kernel_rejected(self):
        with pytest.raises(ConfigError):
            DepthwiseConv2d(4, kernel_size=4)

    def test_shape_preserved(self, rng):
        layer = DepthwiseConv2d(3).reset_parameters(0)
        assert layer(Tensor(rng.standard_normal((2, 5, 4, 3)))).shape == (2, 5, 4, 3)


class TestLayerNormLayer:

    def test_init_is_plain_normalization(self):
        layer = LayerNorm(4).reset_parameters(0)
        assert np.array_equal(layer.weight.data, np.ones(4))
        assert np.array_equal(layer.bias.data, np.zeros(4))


class TestBaseModule:

    def test_parameter_names(self):
        assert _Pair().parameter_names() == [
            "first.weight", "first.bias", "blocks0.weight", "blocks0.bias", "blocks1.weight"
        ]

    def test_names_assigned_on_reset(self):
        model = _Pair().reset_parameters(0)
        assert [param.name for param in model.parameters()] == model.parameter_names()

    def test_num_parameters(self):
        assert _Pair().num_parameters() == 3 * 4 + 4 + 4 * 4 + 4 + 4 * 2

    def test_reset_is_deterministic(self):
        a = _Pair().reset_parameters(3).state_dict()
        b = _Pair().reset_parameters(3).state_dict()
        c = _Pair().reset_parameters(4).state_dict()
        assert all(np.array_equal(a[name], b[name]) for name in a)
        assert not np.array_equal(a["first.weight"], c["first.weight"])

    def test_same_name_same_init_across_models(self):
        """ 按参数名播种：同名参数的初始值和模型里的其他模块无关 """
        single = _Single().reset_parameters(5)
        pair = _Pair().reset_parameters(5)
        assert np.array_equal(single.first.weight.data, pair.first.weight.data)
        assert np.array_equal(single.first.bias.data, pair.first.bias.data)

    def test_state_dict_round_trip(self):
        source = _Pair().reset_parameters(1)
        target = _Pair().reset_parameters(2).load_state_dict(source.state_dict())
        assert all(np.array_equal(source.state_dict()[name], value) for name, value in target.state_dict().items())

    def test_load_state_dict_lists_offending_names(self):
        state = _Pair().reset_parameters(0).state_dict()
        state.pop("first.bias")
        state["extra.weight"] = np.zeros(2)
        state["blocks1.weight"] = np.zeros((3, 3))
        with pytest.raises(CheckpointError) as error:
            _Pair().load_state_dict(state)
        assert error.value.offending == ["first.bias", "extra.weight", "blocks1.weight"]

    def test_to_dtype(self):
        model = _Pair().reset_parameters(0).to_dtype("float32")
        assert all(param.dtype is np.float32 for param in model.parameters())

    def test_zero_grad(self):
        model = _Pair().reset_parameters(0)
        for param in model.parameters():
            param.grad = np.ones_like(param.data)
        model.zero_grad()
        assert all(param.grad is None for param in model.parameters())
