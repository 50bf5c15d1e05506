# -*- coding: utf-8 -*-
from apps.base_model import BaseModule
from apps.tensor import init, ops
from apps.tensor.tensor import Parameter
from config import default_conv_kernel, layer_norm_eps
from utils.exceptions import ConfigError


class Linear(BaseModule):
    """ weight 形状为 (C_in, C_out)，y = x @ W + b """

    def __init__(self, in_channels, out_channels, bias=True, zero_init=False, dtype=None):
        weight_init = init.zeros if zero_init else init.uniform_fan_in(in_channels)
        self.weight = Parameter.empty((in_channels, out_channels), weight_init, dtype)
        bias_init = init.zeros if zero_init else init.uniform_fan_in(in_channels)
        self.bias = Parameter.empty((out_channels,), bias_init, dtype) if bias else None
        self.in_channels = in_channels
        self.out_channels = out_channels

    def forward(self, x):
        return ops.linear(x, self.weight, self.bias)


class DepthwiseConv2d(BaseModule):

    def __init__(self, channels, kernel_size=default_conv_kernel, dtype=None):
        if kernel_size % 2 == 0:
            raise ConfigError(f"卷积核尺寸必须为奇数，收到 {kernel_size}")
        fan_in = kernel_size * kernel_size
        self.weight = Parameter.empty((kernel_size, kernel_size, channels), init.uniform_fan_in(fan_in), dtype)
        self.bias = Parameter.empty((channels,), init.uniform_fan_in(fan_in), dtype)
        self.channels = channels

    def forward(self, x):
        return ops.conv2d_depthwise(x, self.weight, self.bias)


class LayerNorm(BaseModule):

    def __init__(self, channels, eps=layer_norm_eps, dtype=None):
        self.weight = Parameter.empty((channels,), init.ones, dtype)
        self.bias = Parameter.empty((channels,), init.zeros, dtype)
        self.eps = eps

    def forward(self, x):
        return ops.layer_norm(x, self.weight, self.bias, self.eps)
