# -*- coding: utf-8 -*-
import math

import numpy as np

from apps.base_model import BaseModule
from apps.tensor import init
from apps.tensor.layers import Linear
from apps.tensor.tensor import Parameter, to_np_dtype
from config import default_state_size
from utils.exceptions import ConfigError


def default_dt_rank(channels):
    return max(1, math.ceil(channels / 16))


class SSMParams(BaseModule):
    """
    一个 S6 扫描头的参数：
        A_log (C, N)：A = -exp(A_log)，严格为负的逐通道对角阵
        delta_bias (C,)：可学习的 Δ̃，在 batch 和长度上广播
        b_proj / c_proj：C -> N，生成输入相关的 B、C
        dt_down / dt_up：C -> dt_rank -> C 的低秩 Δ 投影
        D (C,)：不训练的跳连系数，默认全 0，不写入权重文件
    """

    def __init__(self, channels, state_size=default_state_size, dt_rank=None, dtype=None):
        if channels < 1 or state_size < 1:
            raise ConfigError(f"SSMParams 需要 C ≥ 1 且 N ≥ 1，收到 C={channels}, N={state_size}")
        dt_rank = dt_rank or default_dt_rank(channels)
        self.A_log = Parameter.empty((channels, state_size), init.a_log, dtype)
        self.delta_bias = Parameter.empty((channels,), init.delta_bias, dtype)
        self.b_proj = Linear(channels, state_size, dtype=dtype)
        self.c_proj = Linear(channels, state_size, dtype=dtype)
        self.dt_down = Linear(channels, dt_rank, bias=False, dtype=dtype)
        self.dt_up = Linear(dt_rank, channels, bias=False, dtype=dtype)
        self.D = np.zeros(channels, dtype=to_np_dtype(dtype))
        self.channels = channels
        self.state_size = state_size
        self.dt_rank = dt_rank
