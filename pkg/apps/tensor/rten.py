# -*- coding: utf-8 -*-
"""
RTEN 张量文件：
    magic "RTEN" | u32 version=1 | u8 dtype(0=f32, 1=f64) | u8 rank | u32 dims[rank] | 小端行主序数据
"""
import struct

import numpy as np

from apps.enums import DtypeEnum
from apps.tensor.tensor import Tensor
from utils.exceptions import CheckpointError
from utils.util.file_util import FileUtil

MAGIC = b"RTEN"
VERSION = 1
_HEADER = struct.Struct("<4sIBB")
_CODE_TO_DTYPE = {DtypeEnum.float32.code: np.dtype("<f4"), DtypeEnum.float64.code: np.dtype("<f8")}


def encode_array(array) -> bytes:
    array = np.asarray(array)
    if array.dtype == np.float32:
        code = DtypeEnum.float32.code
    elif array.dtype == np.float64:
        code = DtypeEnum.float64.code
    else:
        raise CheckpointError(f"RTEN 只支持 float32/float64，收到 {array.dtype}")
    if array.ndim > 255:
        raise CheckpointError(f"RTEN 最多支持 255 维，收到 {array.ndim}")
    header = _HEADER.pack(MAGIC, VERSION, code, array.ndim) + struct.pack(f"<{array.ndim}I", *array.shape)
    payload = np.ascontiguousarray(array, dtype=_CODE_TO_DTYPE[code]).tobytes()
    return header + payload


def decode_array(buffer: bytes, offset=0):
    """ 从 offset 处解出一个数组，返回 (array, 下一个 offset) """
    if len(buffer) - offset < _HEADER.size:
        raise CheckpointError("RTEN 数据被截断：头部不完整")
    magic, version, code, rank = _HEADER.unpack_from(buffer, offset)
    if magic != MAGIC:
        raise CheckpointError(f"RTEN magic 错误：{magic!r}")
    if version != VERSION:
        raise CheckpointError(f"不支持的 RTEN 版本：{version}")
    if code not in _CODE_TO_DTYPE:
        raise CheckpointError(f"未知的 RTEN dtype code：{code}")
    offset += _HEADER.size
    shape = struct.unpack_from(f"<{rank}I", buffer, offset)
    offset += 4 * rank
    dtype = _CODE_TO_DTYPE[code]
    count = int(np.prod(shape, dtype=np.int64))
    end = offset + count * dtype.itemsize
    if end > len(buffer):
        raise CheckpointError(f"RTEN 数据被截断：需要 {end - offset} 字节")
    array = np.frombuffer(buffer, dtype=dtype, count=count, offset=offset).reshape(shape)
    return array.astype(dtype.newbyteorder("="), copy=True), end


def write_array(path, array):
    FileUtil.save_bytes(path, encode_array(array))


def read_array(path):
    buffer = FileUtil.read_bytes(path)
    array, end = decode_array(buffer)
    if end != len(buffer):
        raise CheckpointError(f"{path} 末尾有 {len(buffer) - end} 字节多余数据")
    return array


def save_tensor(path, tensor: Tensor):
    write_array(path, tensor.data)


def load_tensor(path) -> Tensor:
    return Tensor(read_array(path))
