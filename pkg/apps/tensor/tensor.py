# -*- coding: utf-8 -*-
"""
稠密张量 + 反向模式自动微分。

每个前向运算在当前线程的 GradTape 上记录一个节点（输入、输出、伴随函数），
backward 严格按记录顺序的逆序回放，叶子张量上的梯度按求和语义累加。
"""
import threading
from contextlib import contextmanager
from typing import Callable, Optional, Sequence

import numpy as np

from apps.enums import DtypeEnum
from utils.exceptions import NumericDomainError, ShapeError, UsageError

_NP_DTYPES = {DtypeEnum.float32: np.float32, DtypeEnum.float64: np.float64}


class _ThreadState(threading.local):

    def __init__(self):
        self.tape = None
        self.grad_enabled = True
        self.dtype = np.float64


_state = _ThreadState()


def to_np_dtype(dtype):
    """ 接受 DtypeEnum / 字符串 / numpy dtype，返回 float32 或 float64 """
    if dtype is None:
        return _state.dtype
    if isinstance(dtype, str) and not isinstance(dtype, DtypeEnum):
        dtype = DtypeEnum(dtype)
    if isinstance(dtype, DtypeEnum):
        return _NP_DTYPES[dtype]
    dtype = np.dtype(dtype).type
    if dtype not in (np.float32, np.float64):
        raise UsageError(f"只支持 float32/float64，收到 {dtype}")
    return dtype


def get_default_dtype():
    return _state.dtype


def set_default_dtype(dtype):
    _state.dtype = to_np_dtype(dtype)


@contextmanager
def default_dtype(dtype):
    old = _state.dtype
    _state.dtype = to_np_dtype(dtype)
    try:
        yield
    finally:
        _state.dtype = old


@contextmanager
def no_grad():
    """ 上下文内的运算不记录到 tape """
    old = _state.grad_enabled
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = old


def is_grad_enabled():
    return _state.grad_enabled


def _contiguous(array, dtype=None):
    """ 保留 0 维数组，np.ascontiguousarray 会把它变成 1 维 """
    array = np.asarray(array, dtype=dtype)
    return array if array.flags.c_contiguous else np.ascontiguousarray(array)


def check_finite(array, what="tensor"):
    if not np.isfinite(array).all():
        raise NumericDomainError(f"{what} 出现非有限值(NaN/Inf)，shape={tuple(array.shape)}")


class Tensor:
    """ 行主序连续存储的浮点张量 """
    __slots__ = ("data", "requires_grad", "grad", "_node", "__weakref__")
    __array_priority__ = 100  # 让 numpy 标量在左边时走 Tensor.__rmul__ 等

    def __init__(self, data, requires_grad=False, dtype=None):
        if dtype is None and isinstance(data, (np.ndarray, np.floating)) and data.dtype in (np.float32, np.float64):
            dtype = data.dtype
        array = _contiguous(data, to_np_dtype(dtype))
        if any(dim <= 0 for dim in array.shape):
            raise ShapeError(f"张量每一维都必须为正整数，收到 shape={array.shape}")
        check_finite(array)
        self.data = array
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._node = None

    @classmethod
    def _wrap(cls, array, requires_grad=False):
        """ 运算内部使用：array 已经是合法的浮点数组 """
        out = cls.__new__(cls)
        array = _contiguous(array)
        check_finite(array, "运算结果")
        out.data = array
        out.requires_grad = requires_grad
        out.grad = None
        out._node = None
        return out

    # ------------------------------------------------------------------ 属性
    @property
    def shape(self):
        return tuple(self.data.shape)

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return int(self.data.size)

    @property
    def dtype(self):
        return self.data.dtype.type

    @property
    def is_leaf(self):
        return self._node is None

    def numpy(self):
        return self.data

    def item(self):
        if self.data.size != 1:
            raise UsageError(f"只有单元素张量才能 item()，shape={self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self):
        return Tensor._wrap(self.data.copy())

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, grad):
        grad = np.asarray(grad, dtype=self.data.dtype)
        if grad.shape != self.data.shape:
            raise ShapeError(f"梯度形状 {grad.shape} 和张量形状 {self.data.shape} 不一致")
        self.grad = grad.copy() if self.grad is None else self.grad + grad

    def backward(self):
        backward(self)

    def __repr__(self):
        return f"{type(self).__name__}(shape={self.shape}, dtype={self.data.dtype.name}, requires_grad={self.requires_grad})"

    # ------------------------------------------------------------------ 运算符
    def __add__(self, other):
        from apps.tensor import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from apps.tensor import ops
        return ops.add(self, other)

    def __sub__(self, other):
        from apps.tensor import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from apps.tensor import ops
        return ops.add(ops.neg(self), other)

    def __mul__(self, other):
        from apps.tensor import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from apps.tensor import ops
        return ops.mul(self, other)

    def __truediv__(self, other):
        from apps.tensor import ops
        return ops.div(self, other)

    def __neg__(self):
        from apps.tensor import ops
        return ops.neg(self)

    def reshape(self, *shape):
        from apps.tensor import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def sum(self, axis=None):
        from apps.tensor import ops
        return ops.sum(self, axis)

    def mean(self, axis=None):
        from apps.tensor import ops
        return ops.mean(self, axis)


class Parameter(Tensor):
    """ 可训练参数，name 为模型内的属性路径，由 BaseModule.named_parameters 赋值 """
    __slots__ = ("name", "init_fn")

    def __init__(self, data, name="", init_fn: Optional[Callable] = None, dtype=None):
        Tensor.__init__(self, data, requires_grad=True, dtype=dtype)
        self.name = name
        self.init_fn = init_fn

    @classmethod
    def empty(cls, shape, init_fn, dtype=None):
        """ 先按形状占位，初始化交给 BaseModule.reset_parameters 按参数名播种 """
        return cls(np.zeros(shape, dtype=to_np_dtype(dtype)), init_fn=init_fn)

    def __repr__(self):
        return f"Parameter(name={self.name!r}, shape={self.shape}, dtype={self.data.dtype.name})"


class TapeNode:
    __slots__ = ("op", "inputs", "output", "backward_fn")

    def __init__(self, op, inputs, output, backward_fn):
        self.op = op
        self.inputs = inputs
        self.output = output
        self.backward_fn = backward_fn


class GradTape:
    """ 按执行顺序记录运算；每次前向重新构建（define-by-run） """

    def __init__(self):
        self.nodes = []

    def __len__(self):
        return len(self.nodes)

    def record(self, op: str, inputs: Sequence[Tensor], output: Tensor, backward_fn: Callable):
        node = TapeNode(op, tuple(inputs), output, backward_fn)
        output._node = node
        self.nodes.append(node)
        return node

    def clear(self):
        self.nodes = []

    def backward(self, loss: Tensor):
        if loss.data.size != 1 or loss.ndim > 1:
            raise UsageError(f"backward 只能作用在标量上，收到 shape={loss.shape}")
        if not loss.requires_grad:
            raise UsageError("loss 不依赖任何 requires_grad 的张量")
        seed = np.ones_like(loss.data)
        if loss.is_leaf:
            loss._accumulate(seed)
            return

        pending = {id(loss): seed}
        for node in reversed(self.nodes):
            grad = pending.pop(id(node.output), None)
            if grad is None:  # 和 loss 无关的分支
                continue
            input_grads = node.backward_fn(grad)
            for tensor, input_grad in zip(node.inputs, input_grads):
                if input_grad is None or not tensor.requires_grad:
                    continue
                if tensor.is_leaf:
                    tensor._accumulate(input_grad)
                else:
                    key = id(tensor)
                    pending[key] = input_grad if key not in pending else pending[key] + input_grad
        self.clear()

    @classmethod
    def current(cls):
        if _state.tape is None:
            _state.tape = cls()
        return _state.tape

    @classmethod
    @contextmanager
    def recording(cls):
        """ 开一条新的 tape，退出时恢复之前的 """
        old, tape = _state.tape, cls()
        _state.tape = tape
        try:
            yield tape
        finally:
            _state.tape = old


def reset_tape():
    _state.tape = None


def make_result(op: str, array, inputs: Sequence[Tensor], backward_fn: Callable) -> Tensor:
    """ 包装运算结果；需要梯度时把节点记录到当前 tape """
    requires = _state.grad_enabled and any(t.requires_grad for t in inputs)
    out = Tensor._wrap(array, requires)
    if requires:
        GradTape.current().record(op, inputs, out, backward_fn)
    return out


def backward(loss: Tensor):
    """ 从标量 loss 反传，把梯度累加到每个可达叶子的 grad 上 """
    tape = _state.tape
    if not loss.is_leaf and (tape is None or not _on_tape(tape, loss._node)):
        raise UsageError("loss 所在的 tape 已经被清空或不属于当前线程，请重新前向计算")
    (tape or GradTape.current()).backward(loss)


def _on_tape(tape, node):
    if tape.nodes and tape.nodes[-1] is node:
        return True
    return any(item is node for item in tape.nodes)
