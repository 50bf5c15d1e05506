# -*- coding: utf-8 -*-
from typing import Dict, Sequence, Tuple

import numpy as np

from apps.tensor.tensor import Parameter
from config import default_adam_eps, default_betas, default_poly_power, default_weight_decay
from utils.exceptions import OptimizerError, ScheduleError


class AdamWState:
    """ 一阶/二阶矩和步数，按参数名存 """

    def __init__(self):
        self.step = 0
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}


def adamw_step(
        params: Sequence[Tuple[str, Parameter]],
        state: AdamWState,
        lr_t,
        betas=default_betas,
        eps=default_adam_eps,
        weight_decay=default_weight_decay
) -> AdamWState:
    """
    解耦权重衰减：p ← p - lr·wd·p - lr·m̂/(√v̂ + eps)，两项都用更新前的 p。
    先检查全部梯度，有非有限值时不更新任何参数
    """
    grads = []
    for name, param in params:
        grad = param.grad if param.grad is not None else np.zeros_like(param.data)
        if not np.isfinite(grad).all():
            raise OptimizerError(f"参数 {name} 的梯度出现非有限值", name)
        grads.append(grad)

    beta1, beta2 = betas
    state.step += 1
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step
    for (name, param), grad in zip(params, grads):
        m = state.m.get(name)
        v = state.v.get(name)
        m = (1.0 - beta1) * grad if m is None else beta1 * m + (1.0 - beta1) * grad
        v = (1.0 - beta2) * grad * grad if v is None else beta2 * v + (1.0 - beta2) * grad * grad
        state.m[name], state.v[name] = m, v
        m_hat = m / correction1
        v_hat = v / correction2
        old = param.data
        param.data = (old - lr_t * weight_decay * old - lr_t * m_hat / (np.sqrt(v_hat) + eps)).astype(old.dtype)
    return state


def poly_lr(iteration, total, base_lr, power=default_poly_power):
    """ base_lr · (1 - iter/total)^power，要求 0 ≤ iter < total """
    if total <= 0 or iteration < 0 or iteration >= total:
        raise ScheduleError(f"学习率调度越界：iter={iteration}, total={total}")
    return base_lr * (1.0 - iteration / total) ** power
