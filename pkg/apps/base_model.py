# -*- coding: utf-8 -*-
import zlib
from typing import Dict, Iterator, List, Tuple

import numpy as np

from apps.tensor.tensor import Parameter, to_np_dtype
from utils.exceptions import CheckpointError


class BaseModule:
    """ 所有网络模块的基类，参数名由属性路径决定 """

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def named_parameters(self, prefix="") -> Iterator[Tuple[str, Parameter]]:
        """
        按属性赋值顺序遍历参数，名字形如 stage1.stm0.mfe.in_proj.weight；
        list 属性 x 的第 i 个元素命名为 xi。下划线开头的属性不参与
        """
        for key, value in vars(self).items():
            if key.startswith("_"):
                continue
            if isinstance(value, (list, tuple)):
                for index, item in enumerate(value):
                    yield from self._walk(item, f"{prefix}{key}{index}")
            else:
                yield from self._walk(value, f"{prefix}{key}")

    @staticmethod
    def _walk(value, name):
        if isinstance(value, Parameter):
            yield name, value
        elif isinstance(value, BaseModule):
            yield from value.named_parameters(name + ".")

    def parameters(self) -> List[Parameter]:
        return [param for _, param in self.named_parameters()]

    def parameter_names(self) -> List[str]:
        return [name for name, _ in self.named_parameters()]

    def num_parameters(self) -> int:
        return int(sum(param.size for param in self.parameters()))

    def zero_grad(self):
        for param in self.parameters():
            param.zero_grad()

    def reset_parameters(self, seed=0):
        """
        给参数命名并初始化。每个参数用 (seed, crc32(参数名)) 播种，
        所以只差一个模块的两个模型，共有参数的初始值完全相同
        """
        for name, param in self.named_parameters():
            param.name = name
            if param.init_fn is None:
                continue
            rng = np.random.default_rng([int(seed), zlib.crc32(name.encode("utf-8"))])
            param.data = np.ascontiguousarray(param.init_fn(rng, param.shape, param.data.dtype))
            param.grad = None
        return self

    def to_dtype(self, dtype):
        dtype = to_np_dtype(dtype)
        for param in self.parameters():
            param.data = param.data.astype(dtype)
            param.grad = None
        return self

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: param.data.copy() for name, param in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]):
        """ 名字和形状必须一一对应，不匹配时列出所有出问题的参数名 """
        params = dict(self.named_parameters())
        missing = [name for name in params if name not in state]
        unexpected = [name for name in state if name not in params]
        mismatched = [
            name for name in params
            if name in state and tuple(np.shape(state[name])) != params[name].shape
        ]
        offending = missing + unexpected + mismatched
        if offending:
            raise CheckpointError(
                f"权重和模型不匹配：缺少 {missing}，多余 {unexpected}，形状不一致 {mismatched}", offending)
        for name, param in params.items():
            param.data = np.ascontiguousarray(state[name], dtype=param.data.dtype)
            param.grad = None
        return self
