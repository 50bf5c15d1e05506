# -*- coding: utf-8 -*-
"""
张量运算。除 bias 式的尾部对齐广播外不做任何广播，形状不合法直接抛 ShapeError。
每个运算返回 make_result 包装的结果，伴随函数拿到输出梯度，返回各输入的梯度。
"""
from typing import Optional, Sequence

import numpy as np

from apps.enums import ActivationKindEnum
from apps.tensor.tensor import Tensor, make_result
from config import layer_norm_eps, softplus_threshold
from utils.exceptions import ConfigError, ShapeError


# ====================== 内部工具 ======================
def _operand(value, like: Tensor) -> Tensor:
    """ 标量转成和 like 同精度的常量张量 """
    if isinstance(value, Tensor):
        return value
    return Tensor._wrap(np.asarray(value, dtype=like.data.dtype))


def _check_bias_broadcast(a: Tensor, b: Tensor, op: str):
    """ 形状相同，或者其中一个是另一个的尾部（bias-add），或者是标量 """
    if a.shape == b.shape or b.ndim == 0 or a.ndim == 0:
        return
    short, long = (b, a) if b.ndim <= a.ndim else (a, b)
    if long.shape[long.ndim - short.ndim:] != short.shape:
        raise ShapeError(f"{op}: 形状 {a.shape} 和 {b.shape} 不能按尾部对齐广播")


def _unbroadcast(grad, shape):
    """ 把广播后的梯度按前导维求和还原到 shape """
    if grad.shape == tuple(shape):
        return grad
    lead = grad.ndim - len(shape)
    if lead > 0:
        grad = grad.sum(axis=tuple(range(lead)))
    return grad.reshape(shape)


def _elementwise(op, a, b, forward, grad_a, grad_b):
    a = _operand(a, b if isinstance(b, Tensor) else a)
    b = _operand(b, a)
    _check_bias_broadcast(a, b, op)
    out = forward(a.data, b.data)

    def backward(grad):
        return (
            _unbroadcast(grad_a(grad, a.data, b.data), a.shape) if a.requires_grad else None,
            _unbroadcast(grad_b(grad, a.data, b.data), b.shape) if b.requires_grad else None,
        )

    return make_result(op, out, (a, b), backward)


# ====================== 逐元素运算 ======================
def add(a, b) -> Tensor:
    return _elementwise(
        "add", a, b, np.add,
        lambda g, x, y: np.broadcast_to(g, np.broadcast_shapes(x.shape, y.shape)),
        lambda g, x, y: np.broadcast_to(g, np.broadcast_shapes(x.shape, y.shape)),
    )


def sub(a, b) -> Tensor:
    return _elementwise(
        "sub", a, b, np.subtract,
        lambda g, x, y: np.broadcast_to(g, np.broadcast_shapes(x.shape, y.shape)),
        lambda g, x, y: -np.broadcast_to(g, np.broadcast_shapes(x.shape, y.shape)),
    )


def mul(a, b) -> Tensor:
    return _elementwise(
        "mul", a, b, np.multiply,
        lambda g, x, y: g * y,
        lambda g, x, y: g * x,
    )


def div(a, b) -> Tensor:
    return _elementwise(
        "div", a, b, np.divide,
        lambda g, x, y: g / y,
        lambda g, x, y: -g * x / (y * y),
    )


def neg(x: Tensor) -> Tensor:
    return make_result("neg", -x.data, (x,), lambda g: (-g,))


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)
    return make_result("exp", out, (x,), lambda g: (g * out,))


def log(x: Tensor) -> Tensor:
    return make_result("log", np.log(x.data), (x,), lambda g: (g / x.data,))


def abs(x: Tensor) -> Tensor:
    return make_result("abs", np.abs(x.data), (x,), lambda g: (g * np.sign(x.data),))


# ====================== 归约 ======================
def sum(x: Tensor, axis=None) -> Tensor:
    out = np.sum(x.data, axis=axis)

    def backward(grad):
        if axis is not None:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad, x.shape),)

    return make_result("sum", out, (x,), backward)


def mean(x: Tensor, axis=None) -> Tensor:
    count = x.size if axis is None else int(np.prod([x.shape[i] for i in np.atleast_1d(axis)]))
    out = np.mean(x.data, axis=axis)

    def backward(grad):
        if axis is not None:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad / count, x.shape),)

    return make_result("mean", out, (x,), backward)


# ====================== 形状变换 ======================
def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(int(dim) for dim in shape)
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: 不能把 {x.shape} 变成 {shape}")
    return make_result("reshape", out, (x,), lambda g: (g.reshape(x.shape),))


def permute(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return make_result("permute", np.transpose(x.data, axes), (x,), lambda g: (np.transpose(g, inverse),))


def flip(x: Tensor, axis: int) -> Tensor:
    return make_result("flip", np.flip(x.data, axis), (x,), lambda g: (np.flip(g, axis),))


def index_select(x: Tensor, index, axis: int) -> Tensor:
    """ 沿 axis 按下标取，下标可以重复，反传时用 add.at 累加 """
    index = np.asarray(index, dtype=np.int64)
    out = np.take(x.data, index, axis=axis)

    def backward(grad):
        full = np.zeros_like(x.data)
        moved = np.moveaxis(full, axis, 0)
        np.add.at(moved, index, np.moveaxis(grad, axis, 0))
        return (full,)

    return make_result("index_select", out, (x,), backward)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = list(tensors)
    if not tensors:
        raise ShapeError("concat: 至少需要一个张量")
    ndim = tensors[0].ndim
    axis = axis % ndim
    for tensor in tensors:
        if tensor.ndim != ndim or any(
                tensor.shape[i] != tensors[0].shape[i] for i in range(ndim) if i != axis):
            raise ShapeError(f"concat: 形状 {tensors[0].shape} 和 {tensor.shape} 除拼接轴外必须一致")
    sizes = [tensor.shape[axis] for tensor in tensors]
    out = np.concatenate([tensor.data for tensor in tensors], axis=axis)

    def backward(grad):
        return tuple(np.split(grad, np.cumsum(sizes)[:-1], axis=axis))

    return make_result("concat", out, tensors, backward)


def space_to_depth(x: Tensor, block: int) -> Tensor:
    """ (B,H,W,C) -> (B,H/s,W/s,s*s*C)，通道顺序为 (p, q, c)，即步长为 s 的 patch 切分 """
    batch, height, width, channels = x.shape
    if height % block or width % block:
        raise ShapeError(f"space_to_depth: 空间尺寸 {(height, width)} 不能被 {block} 整除")
    y = reshape(x, (batch, height // block, block, width // block, block, channels))
    y = permute(y, (0, 1, 3, 2, 4, 5))
    return reshape(y, (batch, height // block, width // block, block * block * channels))


def depth_to_space(x: Tensor, block: int) -> Tensor:
    """ space_to_depth 的逆：out[b, s*i+p, s*j+q, c] = x[b, i, j, (s*p+q)*C' + c] """
    batch, height, width, channels = x.shape
    if channels % (block * block):
        raise ConfigError(f"depth_to_space: 通道数 {channels} 不能被 {block * block} 整除")
    out_channels = channels // (block * block)
    y = reshape(x, (batch, height, width, block, block, out_channels))
    y = permute(y, (0, 1, 3, 2, 4, 5))
    return reshape(y, (batch, height * block, width * block, out_channels))


# ====================== 神经网络原语 ======================
def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """ y[..., j] = Σ_i x[..., i]·W[i, j] + b[j] """
    if weight.ndim != 2 or x.shape[-1] != weight.shape[0]:
        raise ShapeError(f"linear: 输入形状 {x.shape} 和权重形状 {weight.shape} 不匹配")
    if bias is not None and bias.shape != (weight.shape[1],):
        raise ShapeError(f"linear: bias 形状 {bias.shape} 和权重形状 {weight.shape} 不匹配")
    lead = x.shape[:-1]
    x2 = x.data.reshape(-1, weight.shape[0])
    out = x2 @ weight.data
    if bias is not None:
        out = out + bias.data
    out = out.reshape(lead + (weight.shape[1],))

    def backward(grad):
        g2 = grad.reshape(-1, weight.shape[1])
        grad_x = (g2 @ weight.data.T).reshape(x.shape) if x.requires_grad else None
        grad_w = x2.T @ g2 if weight.requires_grad else None
        grad_b = g2.sum(axis=0) if bias is not None and bias.requires_grad else None
        return grad_x, grad_w, grad_b

    inputs = (x, weight) if bias is None else (x, weight, bias)
    return make_result("linear", out, inputs, backward)


def conv2d_depthwise(x: Tensor, kernel: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """ 逐通道 k×k 卷积，零填充 same padding，输入输出形状一致 (B,H,W,C) """
    if x.ndim != 4:
        raise ShapeError(f"conv2d_depthwise: 输入必须是 (B,H,W,C)，收到 {x.shape}")
    size = kernel.shape[0]
    if kernel.ndim != 3 or kernel.shape[1] != size or kernel.shape[2] != x.shape[3]:
        raise ShapeError(f"conv2d_depthwise: 卷积核形状 {kernel.shape} 和输入形状 {x.shape} 不匹配")
    if size % 2 == 0:
        raise ConfigError(f"conv2d_depthwise: 卷积核尺寸必须为奇数，收到 {size}")
    if bias is not None and bias.shape != (x.shape[3],):
        raise ShapeError(f"conv2d_depthwise: bias 形状 {bias.shape} 和通道数 {x.shape[3]} 不匹配")
    _, height, width, _ = x.shape
    pad = size // 2
    padded = np.pad(x.data, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    out = np.zeros_like(x.data)
    for i in range(size):
        for j in range(size):
            out += padded[:, i:i + height, j:j + width, :] * kernel.data[i, j]
    if bias is not None:
        out += bias.data

    def backward(grad):
        grad_padded = np.zeros_like(padded) if x.requires_grad else None
        grad_k = np.zeros_like(kernel.data) if kernel.requires_grad else None
        for i in range(size):
            for j in range(size):
                if grad_padded is not None:
                    grad_padded[:, i:i + height, j:j + width, :] += grad * kernel.data[i, j]
                if grad_k is not None:
                    grad_k[i, j] = (padded[:, i:i + height, j:j + width, :] * grad).sum(axis=(0, 1, 2))
        grad_x = grad_padded[:, pad:pad + height, pad:pad + width, :] if grad_padded is not None else None
        grad_b = grad.sum(axis=(0, 1, 2)) if bias is not None and bias.requires_grad else None
        return grad_x, grad_k, grad_b

    inputs = (x, kernel) if bias is None else (x, kernel, bias)
    return make_result("conv2d_depthwise", out, inputs, backward)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = layer_norm_eps) -> Tensor:
    """ 沿最后一维归一化，方差用 1/C（有偏） """
    channels = x.shape[-1]
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise ShapeError(f"layer_norm: gamma {gamma.shape} / beta {beta.shape} 和输入 {x.shape} 不匹配")
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    x_hat = centered * inv
    out = x_hat * gamma.data + beta.data

    def backward(grad):
        grad_x = None
        if x.requires_grad:
            d_hat = grad * gamma.data
            grad_x = inv / channels * (
                channels * d_hat
                - d_hat.sum(axis=-1, keepdims=True)
                - x_hat * (d_hat * x_hat).sum(axis=-1, keepdims=True)
            )
        lead = tuple(range(grad.ndim - 1))
        grad_gamma = (grad * x_hat).sum(axis=lead) if gamma.requires_grad else None
        grad_beta = grad.sum(axis=lead) if beta.requires_grad else None
        return grad_x, grad_gamma, grad_beta

    return make_result("layer_norm", out, (x, gamma, beta), backward)


def _sigmoid(values):
    """ 分段计算，两侧都不会溢出 """
    out = np.empty_like(values)
    positive = values >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-values[positive]))
    exp_neg = np.exp(values[~positive])
    out[~positive] = exp_neg / (1.0 + exp_neg)
    return out


def _softplus(values):
    """ x 超过阈值时直接返回 x，否则 ln(1+e^x) """
    capped = np.minimum(values, softplus_threshold)
    return np.where(values > softplus_threshold, values, np.log1p(np.exp(capped)))


def sigmoid(x: Tensor) -> Tensor:
    out = _sigmoid(x.data)
    return make_result("sigmoid", out, (x,), lambda g: (g * out * (1.0 - out),))


def silu(x: Tensor) -> Tensor:
    s = _sigmoid(x.data)
    return make_result("silu", x.data * s, (x,), lambda g: (g * s * (1.0 + x.data * (1.0 - s)),))


def softplus(x: Tensor) -> Tensor:
    return make_result("softplus", _softplus(x.data), (x,), lambda g: (g * _sigmoid(x.data),))


_ACTIVATIONS = {
    ActivationKindEnum.silu: silu,
    ActivationKindEnum.sigmoid: sigmoid,
    ActivationKindEnum.softplus: softplus,
}


def activation(x: Tensor, kind) -> Tensor:
    return _ACTIVATIONS[ActivationKindEnum(kind)](x)
