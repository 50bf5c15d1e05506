# -*- coding: utf-8 -*-
"""
SS2D：沿四个固定方向把 (B,H,W,C) 展平成序列分别做 S6，恢复到二维后逐元素相加。

    d1 行优先，从左到右、从上到下
    d2 d1 的逆序
    d3 列优先，从上到下、从左到右
    d4 d3 的逆序
"""
from typing import List, Sequence

import numpy as np

from apps.ssm.params import SSMParams
from apps.ssm.s6 import s6_forward
from apps.ssm.scan import ScanConfig
from apps.tensor import ops
from apps.tensor.tensor import Tensor
from utils.exceptions import ShapeError

DIRECTION_COUNT = 4


def direction_orders(height, width) -> List[np.ndarray]:
    """ 每个方向的第 k 个序列位置对应的行优先展平下标 """
    row_major = np.arange(height * width)
    col_major = row_major.reshape(height, width).T.reshape(-1)
    return [row_major, row_major[::-1].copy(), col_major, col_major[::-1].copy()]


def ss2d_directions(z: Tensor, params: Sequence[SSMParams], cfg: ScanConfig = None) -> List[Tensor]:
    """ 返回四个方向各自恢复到 (B,H,W,C) 的输出，顺序 d1..d4 """
    if z.ndim != 4:
        raise ShapeError(f"ss2d: 输入必须是 (B,H,W,C)，收到 {z.shape}")
    if len(params) != DIRECTION_COUNT:
        raise ShapeError(f"ss2d: 需要 {DIRECTION_COUNT} 组 SSMParams，收到 {len(params)}")
    batch, height, width, channels = z.shape
    flat = ops.reshape(z, (batch, height * width, channels))
    outputs = []
    for order, direction_params in zip(direction_orders(height, width), params):
        sequence = ops.index_select(flat, order, axis=1)
        scanned = s6_forward(sequence, direction_params, cfg)
        restored = ops.index_select(scanned, np.argsort(order), axis=1)
        outputs.append(ops.reshape(restored, (batch, height, width, channels)))
    return outputs


def ss2d(z: Tensor, params: Sequence[SSMParams], cfg: ScanConfig = None) -> Tensor:
    d1, d2, d3, d4 = ss2d_directions(z, params, cfg)
    return ops.add(ops.add(ops.add(d1, d2), d3), d4)
