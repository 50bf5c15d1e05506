# -*- coding: utf-8 -*-
"""
选择性扫描 h_l = Ā_l ⊙ h_{l-1} + B̄_l · x_l，y_l = Σ_n C_l[n]·h_l[n]，h_0 = 0。

naive 为逐步递推，是其他实现的基准；chunked 先在每个块内顺序递推（所有块一起向量化），
再用结合律算子 (a1,h1)∘(a2,h2) = (a1·a2, a2·h1 + h2) 从左到右把进位传过各个块。
"""
import math

import numpy as np
from pydantic import BaseModel as pydanticBaseModel, Field

from apps.enums import ScanModeEnum
from apps.tensor.tensor import Tensor, make_result
from config import default_chunk_len
from utils.exceptions import ShapeError


class ScanConfig(pydanticBaseModel):
    chunk_len: int = Field(default_chunk_len, ge=1, title="分块长度")
    mode: ScanModeEnum = Field(ScanModeEnum.chunked, title="扫描实现")


NAIVE = ScanConfig(mode=ScanModeEnum.naive)


def combine_pairs(left, right):
    """ (a1,h1)∘(a2,h2) = (a1·a2, a2·h1 + h2) """
    a1, h1 = left
    a2, h2 = right
    return a1 * a2, a2 * h1 + h2


def scan_states_naive(a, u):
    """ a, u: (B, L, C, N)，返回每一步的状态 h """
    states = np.empty_like(u)
    state = np.zeros_like(u[:, 0])
    for step in range(u.shape[1]):
        state = a[:, step] * state + u[:, step]
        states[:, step] = state
    return states


def scan_states_chunked(a, u, chunk_len):
    batch, length = u.shape[:2]
    rest = u.shape[2:]
    size = min(chunk_len, length)
    n_chunks = math.ceil(length / size)
    pad = n_chunks * size - length
    if pad:
        a = np.concatenate([a, np.ones((batch, pad) + rest, dtype=a.dtype)], axis=1)
        u = np.concatenate([u, np.zeros((batch, pad) + rest, dtype=u.dtype)], axis=1)
    a = a.reshape((batch, n_chunks, size) + rest)
    u = u.reshape((batch, n_chunks, size) + rest)

    # 块内：假设进位为 0 顺序递推，同时记录块内累计衰减
    local = np.empty_like(u)
    decay = np.empty_like(a)
    prod = np.ones_like(a[:, :, 0])
    state = np.zeros_like(u[:, :, 0])
    for step in range(size):
        prod, state = combine_pairs((prod, state), (a[:, :, step], u[:, :, step]))
        local[:, :, step] = state
        decay[:, :, step] = prod

    # 块间：严格从左到右
    states = np.empty_like(u)
    carry_decay = np.ones_like(a[:, 0, 0])
    carry = np.zeros_like(u[:, 0, 0])
    for chunk in range(n_chunks):
        states[:, chunk] = local[:, chunk] + decay[:, chunk] * carry[:, None]
        carry_decay, carry = combine_pairs((carry_decay, carry), (decay[:, chunk, -1], local[:, chunk, -1]))

    return states.reshape((batch, n_chunks * size) + rest)[:, :length]


def scan_states(a, u, cfg: ScanConfig = None):
    cfg = cfg or ScanConfig()
    if cfg.mode == ScanModeEnum.naive:
        return scan_states_naive(a, u)
    return scan_states_chunked(a, u, cfg.chunk_len)


def _check_shapes(a_bar: Tensor, b_bar: Tensor, c_seq: Tensor, x: Tensor):
    if a_bar.ndim != 4 or a_bar.shape != b_bar.shape:
        raise ShapeError(f"scan: Ā {a_bar.shape} 和 B̄ {b_bar.shape} 必须同为 (B,L,C,N)")
    batch, length, channels, state_size = a_bar.shape
    if c_seq.shape != (batch, length, state_size):
        raise ShapeError(f"scan: C {c_seq.shape} 和 Ā {a_bar.shape} 不匹配，应为 {(batch, length, state_size)}")
    if x.shape != (batch, length, channels):
        raise ShapeError(f"scan: x {x.shape} 和 Ā {a_bar.shape} 不匹配，应为 {(batch, length, channels)}")


def selective_scan(a_bar: Tensor, b_bar: Tensor, c_seq: Tensor, x: Tensor, cfg: ScanConfig = None) -> Tensor:
    """ 前向按 cfg 扫描；反向是同一递推的逆序扫描，Ā 错位一位 """
    _check_shapes(a_bar, b_bar, c_seq, x)
    a = a_bar.data
    states = scan_states(a, b_bar.data * x.data[..., None], cfg)
    y = np.einsum("blcn,bln->blc", states, c_seq.data)

    def backward(grad):
        direct = grad[..., None] * c_seq.data[:, :, None, :]
        a_next = np.concatenate([a[:, 1:], np.ones_like(a[:, :1])], axis=1)
        d_states = scan_states(a_next[:, ::-1], direct[:, ::-1], cfg)[:, ::-1]
        prev = np.concatenate([np.zeros_like(states[:, :1]), states[:, :-1]], axis=1)
        grad_a = d_states * prev if a_bar.requires_grad else None
        grad_b = d_states * x.data[..., None] if b_bar.requires_grad else None
        grad_c = np.einsum("blcn,blc->bln", states, grad) if c_seq.requires_grad else None
        grad_x = (d_states * b_bar.data).sum(axis=-1) if x.requires_grad else None
        return grad_a, grad_b, grad_c, grad_x

    return make_result("selective_scan", y, (a_bar, b_bar, c_seq, x), backward)


def ssm_scan_naive(a_bar: Tensor, b_bar: Tensor, c_seq: Tensor, x: Tensor) -> Tensor:
    return selective_scan(a_bar, b_bar, c_seq, x, NAIVE)


def ssm_scan_chunked(a_bar: Tensor, b_bar: Tensor, c_seq: Tensor, x: Tensor, cfg: ScanConfig = None) -> Tensor:
    cfg = cfg or ScanConfig()
    return selective_scan(a_bar, b_bar, c_seq, x, ScanConfig(chunk_len=cfg.chunk_len, mode=ScanModeEnum.chunked))


def max_rel_err(value, reference):
    """ 按范数的相对误差 max|Δ| / max|ref|；ref 全为 0 时退化为绝对误差 """
    value, reference = np.asarray(value, dtype=np.float64), np.asarray(reference, dtype=np.float64)
    diff = float(np.max(np.abs(value - reference))) if value.size else 0.0
    scale = float(np.max(np.abs(reference))) if reference.size else 0.0
    return diff / scale if scale > 0 else diff
