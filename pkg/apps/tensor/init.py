# -*- coding: utf-8 -*-
"""
参数初始化函数。统一签名 init(rng, shape, dtype) -> ndarray，
由 BaseModule.reset_parameters 用按参数名播种的 rng 调用。
"""
import math

import numpy as np

from config import delta_init_range


def zeros(rng, shape, dtype):
    return np.zeros(shape, dtype=dtype)


def ones(rng, shape, dtype):
    return np.ones(shape, dtype=dtype)


def constant(value):
    def init(rng, shape, dtype):
        return np.full(shape, value, dtype=dtype)

    return init


def uniform_fan_in(fan_in):
    """ U(-1/√fan_in, 1/√fan_in)，线性层和卷积的默认初始化 """
    bound = 1.0 / math.sqrt(max(1, fan_in))

    def init(rng, shape, dtype):
        return rng.uniform(-bound, bound, size=shape).astype(dtype)

    return init


def a_log(rng, shape, dtype):
    """ A_log[c, n] = ln(n+1)，即 A[c, n] = -(n+1) """
    channels, state_size = shape
    return np.tile(np.log(np.arange(1, state_size + 1, dtype=np.float64)), (channels, 1)).astype(dtype)


def delta_bias(rng, shape, dtype, low=delta_init_range[0], high=delta_init_range[1]):
    """ 让 softplus(delta_bias) 在 [low, high] 上对数均匀分布，取 softplus 的反函数 """
    dt = np.exp(rng.uniform(math.log(low), math.log(high), size=shape))
    return (dt + np.log(-np.expm1(-dt))).astype(dtype)
