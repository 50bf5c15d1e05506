# -*- coding: utf-8 -*-
"""
MTMB 权重文件：
    magic "MTMB" | u32 version=1 | u32 参数个数 | 重复 (u16 名字长度 | UTF-8 名字 | RTEN 数据)
"""
import os
import struct
from typing import Dict

import numpy as np

from apps.base_model import BaseModule
from apps.tensor.rten import decode_array, encode_array
from utils.exceptions import CheckpointError
from utils.logs.log import logger
from utils.util.file_util import FileUtil

MAGIC = b"MTMB"
VERSION = 1
_HEADER = struct.Struct("<4sII")
_NAME_LEN = struct.Struct("<H")


def encode_state(state: Dict[str, np.ndarray]) -> bytes:
    chunks = [_HEADER.pack(MAGIC, VERSION, len(state))]
    for name, array in state.items():
        raw = name.encode("utf-8")
        chunks.append(_NAME_LEN.pack(len(raw)) + raw + encode_array(array))
    return b"".join(chunks)


def decode_state(buffer: bytes) -> Dict[str, np.ndarray]:
    if len(buffer) < _HEADER.size:
        raise CheckpointError("权重文件被截断：头部不完整")
    magic, version, count = _HEADER.unpack_from(buffer, 0)
    if magic != MAGIC:
        raise CheckpointError(f"权重文件 magic 错误：{magic!r}")
    if version != VERSION:
        raise CheckpointError(f"不支持的权重文件版本：{version}")
    offset, state = _HEADER.size, {}
    for _ in range(count):
        if offset + _NAME_LEN.size > len(buffer):
            raise CheckpointError("权重文件被截断：参数名不完整")
        (length,) = _NAME_LEN.unpack_from(buffer, offset)
        offset += _NAME_LEN.size
        name = buffer[offset:offset + length].decode("utf-8")
        offset += length
        if name in state:
            raise CheckpointError(f"权重文件里参数名重复：{name}", [name])
        state[name], offset = decode_array(buffer, offset)
    if offset != len(buffer):
        raise CheckpointError(f"权重文件末尾有 {len(buffer) - offset} 字节多余数据")
    return state


def save_checkpoint(path, model: BaseModule):
    """ 先写临时文件再替换，中途失败不会破坏已有的权重文件 """
    FileUtil.check_dir(os.path.dirname(os.path.abspath(path)))
    temp_path = f"{path}.tmp"
    FileUtil.save_bytes(temp_path, encode_state(model.state_dict()))
    os.replace(temp_path, path)
    logger.debug(f"权重已保存：{path}")
    return path


def load_checkpoint(path, model: BaseModule):
    if not os.path.exists(path):
        raise CheckpointError(f"权重文件不存在：{path}")
    model.load_state_dict(decode_state(FileUtil.read_bytes(path)))
    return model
