# -*- coding: utf-8 -*-
"""
有限差分梯度校验：中心差分 (f(x+h·e_i) - f(x-h·e_i)) / 2h，h = step·max(1, |x_i|)。
只在 64 位精度下使用。
"""
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel as pydanticBaseModel, Field

from apps.tensor.tensor import Tensor, backward, no_grad
from utils.exceptions import MyBaseError, OracleError
from utils.logs.log import logger


class GradCheckReport(pydanticBaseModel):
    name: str = Field(..., title="被校验对象")
    checked: int = Field(..., title="校验的坐标数")
    max_rel_err: float = Field(..., title="最大相对误差")
    worst: str = Field("", title="误差最大的坐标")
    tol: float = Field(..., title="阈值")

    @property
    def passed(self):
        return self.max_rel_err <= self.tol


def relative_error(analytic, numeric, floor=1e-5):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def _require_float64(tensor: Tensor):
    if tensor.data.dtype != np.float64:
        raise OracleError(f"有限差分校验只在 float64 下进行，收到 {tensor.data.dtype}")


def _evaluate(f: Callable[[], object]) -> float:
    try:
        with no_grad():
            value = f()
    except MyBaseError as error:
        raise OracleError(f"有限差分求值失败：{error}")
    value = value.item() if isinstance(value, Tensor) else float(value)
    if not np.isfinite(value):
        raise OracleError("有限差分求值得到非有限值")
    return value


def _central_difference(f: Callable[[], object], tensor: Tensor, flat_index: int, step: float) -> float:
    flat = tensor.data.reshape(-1)
    original = flat[flat_index]
    h = step * max(1.0, abs(original))
    try:
        flat[flat_index] = original + h
        upper = _evaluate(f)
        flat[flat_index] = original - h
        lower = _evaluate(f)
    finally:
        flat[flat_index] = original
    return (upper - lower) / (2.0 * h)


def finite_difference_grad(f: Callable[[Tensor], object], x: Tensor, h=1e-5, coords: Optional[Sequence[int]] = None) -> Tensor:
    """ 返回和 x 同形状的数值梯度；给了 coords（展平下标）时只计算这些坐标，其余为 0 """
    _require_float64(x)
    grad = np.zeros(x.size, dtype=np.float64)
    indices = range(x.size) if coords is None else coords
    for index in indices:
        grad[index] = _central_difference(lambda: f(x), x, int(index), h)
    return Tensor(grad.reshape(x.shape))


def gradient_check(
        f: Callable[[], Tensor],
        tensors: Sequence[Tuple[str, Tensor]],
        n_coords=100,
        rng=None,
        h=1e-5,
        tol=1e-4,
        floor=1e-5,
        name="gradient_check"
) -> GradCheckReport:
    """
    f 不带参数，闭包引用 tensors 并返回标量 loss。
    先做一次 backward 得到解析梯度，再在所有张量的展平坐标里随机抽 n_coords 个做中心差分比较
    """
    rng = rng or np.random.default_rng(0)
    for _, tensor in tensors:
        _require_float64(tensor)
        tensor.zero_grad()

    loss = f()
    backward(loss)
    analytic = [tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data) for _, tensor in tensors]

    sizes = np.array([tensor.size for _, tensor in tensors], dtype=np.int64)
    total = int(sizes.sum())
    picks = np.arange(total) if total <= n_coords else np.sort(rng.choice(total, size=n_coords, replace=False))
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    worst_err, worst = 0.0, ""
    for pick in picks:
        which = int(np.searchsorted(offsets, pick, side="right") - 1)
        local = int(pick - offsets[which])
        label, tensor = tensors[which]
        numeric = _central_difference(f, tensor, local, h)
        err = relative_error(float(analytic[which].reshape(-1)[local]), numeric, floor)
        if err > worst_err:
            worst_err, worst = err, f"{label}[{local}]"

    report = GradCheckReport(name=name, checked=len(picks), max_rel_err=worst_err, worst=worst, tol=tol)
    logger.debug(f"梯度校验 {name}: {report.checked} 个坐标，最大相对误差 {worst_err:.3e} @ {worst}")
    return report


def jitter_zero_parameters(module, rng=None, scale=0.1):
    """ 把全零的参数（零初始化的残差投影）换成小随机数，否则它们之前的梯度全为 0，校验没有意义 """
    rng = rng or np.random.default_rng(0)
    for name, param in module.named_parameters():
        if not np.any(param.data):
            param.data = (scale * rng.standard_normal(param.shape)).astype(param.data.dtype)
    return module
