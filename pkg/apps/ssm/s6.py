# -*- coding: utf-8 -*-
"""
S6：B、C、Δ 都由输入生成的选择性 SSM。

    B = Linear(x)                     (B, L, N)
    C = Linear(x)                     (B, L, N)
    Δ = SoftPlus(Δ̃ + Linear(x))       (B, L, C)
    Ā, B̄ = discretize(-exp(A_log), B, Δ)
    y = scan(Ā, B̄, C, x)  [+ D ⊙ x]
"""
import numpy as np

from apps.ssm.discretize import discretize
from apps.ssm.params import SSMParams
from apps.ssm.scan import ScanConfig, selective_scan
from apps.tensor import ops
from apps.tensor.tensor import Tensor
from utils.exceptions import ShapeError


def s6_inputs(x: Tensor, params: SSMParams):
    """ 生成扫描需要的 (Ā, B̄, C)，单独拿出来方便逐步对照 """
    if x.ndim != 3 or x.shape[-1] != params.channels:
        raise ShapeError(f"s6: 输入形状 {x.shape} 和参数通道数 {params.channels} 不匹配，应为 (B, L, {params.channels})")
    b_seq = params.b_proj(x)
    c_seq = params.c_proj(x)
    delta = ops.softplus(ops.add(params.dt_up(params.dt_down(x)), params.delta_bias))
    A = ops.neg(ops.exp(params.A_log))
    a_bar, b_bar = discretize(A, b_seq, delta)
    return a_bar, b_bar, c_seq


def s6_forward(x: Tensor, params: SSMParams, cfg: ScanConfig = None) -> Tensor:
    a_bar, b_bar, c_seq = s6_inputs(x, params)
    y = selective_scan(a_bar, b_bar, c_seq, x, cfg)
    if np.any(params.D):
        y = ops.add(y, ops.mul(x, Tensor(params.D.astype(x.data.dtype))))
    return y
