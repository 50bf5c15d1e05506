# -*- coding: utf-8 -*-
"""
离散化：Ā = exp(Δ·A)，B̄ = Δ·B（欧拉近似）。
A 为 (C, N) 对角阵，B 为 (B, L, N)，Δ 为 (B, L, C)，输出都是 (B, L, C, N)。
"""
import numpy as np

from apps.tensor.tensor import Tensor, make_result
from config import _debug
from utils.exceptions import NumericDomainError, ShapeError


def _check_shapes(A: Tensor, B: Tensor, delta: Tensor):
    if A.ndim != 2 or B.ndim != 3 or delta.ndim != 3:
        raise ShapeError(f"discretize: A {A.shape}、B {B.shape}、Δ {delta.shape} 维数不对")
    if delta.shape[:2] != B.shape[:2] or delta.shape[2] != A.shape[0] or B.shape[2] != A.shape[1]:
        raise ShapeError(f"discretize: A {A.shape}、B {B.shape}、Δ {delta.shape} 形状不一致")
    if not (delta.data > 0).all():
        raise NumericDomainError(f"discretize: Δ 必须全部为正，最小值 {float(delta.data.min())}")


def discretize_a(A: Tensor, delta: Tensor) -> Tensor:
    a_bar = np.exp(delta.data[..., None] * A.data)
    if _debug and not ((a_bar > 0) & (a_bar < 1)).all():
        raise NumericDomainError("Ā 不在 (0,1) 区间内，A 必须为负且 Δ 必须为正")

    def backward(grad):
        local = grad * a_bar
        grad_a = np.einsum("blcn,blc->cn", local, delta.data) if A.requires_grad else None
        grad_delta = np.einsum("blcn,cn->blc", local, A.data) if delta.requires_grad else None
        return grad_a, grad_delta

    return make_result("discretize_a", a_bar, (A, delta), backward)


def discretize_b(B: Tensor, delta: Tensor) -> Tensor:
    b_bar = delta.data[..., None] * B.data[:, :, None, :]

    def backward(grad):
        grad_b = np.einsum("blcn,blc->bln", grad, delta.data) if B.requires_grad else None
        grad_delta = np.einsum("blcn,bln->blc", grad, B.data) if delta.requires_grad else None
        return grad_b, grad_delta

    return make_result("discretize_b", b_bar, (B, delta), backward)


def discretize(A: Tensor, B: Tensor, delta: Tensor):
    """ 返回 (Ā, B̄) """
    _check_shapes(A, B, delta)
    return discretize_a(A, delta), discretize_b(B, delta)


def exact_zoh_b(A, B, delta):
    """
    对角 A 下精确零阶保持的 B̄ = (ΔA)^-1 (exp(ΔA) - I) ΔB = (exp(ΔA) - 1) / A · B，
    只用来衡量欧拉近似的误差
    """
    A, B, delta = (np.asarray(item, dtype=np.float64) for item in (A, B, delta))
    scale = np.expm1(delta[..., None] * A) / A
    return scale * B[:, :, None, :]
