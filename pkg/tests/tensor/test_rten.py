# -*- coding: utf-8 -*-
import os
import struct

import numpy as np
import pytest

from apps.tensor.rten import decode_array, encode_array, load_tensor, read_array, save_tensor, write_array
from apps.tensor.tensor import Tensor
from utils.exceptions import CheckpointError


class TestRten:

    def test_header_layout(self):
        blob = encode_array(np.arange(6, dtype=np.float32).reshape(2, 3))
        assert blob[:4] == b"RTEN"
        assert struct.unpack_from("<IBB", blob, 4) == (1, 0, 2)
        assert struct.unpack_from("<2I", blob, 10) == (2, 3)
        assert len(blob) == 10 + 8 + 6 * 4
        assert np.frombuffer(blob[18:], dtype="<f4").tolist() == [0, 1, 2, 3, 4, 5]

    def test_float64_code(self):
        assert struct.unpack_from("<B", encode_array(np.zeros(1)), 8) == (1,)

    @pytest.mark.parametrize("dtype", [np.float32, np.float64])
    def test_file_round_trip(self, tmp_dir, rng, dtype):
        array = rng.standard_normal((3, 1, 4)).astype(dtype)
        path = os.path.join(tmp_dir, "x.rten")
        write_array(path, array)
        loaded = read_array(path)
        assert loaded.dtype == dtype
        assert np.array_equal(loaded, array)

    def test_tensor_round_trip(self, tmp_dir):
        path = os.path.join(tmp_dir, "t.rten")
        save_tensor(path, Tensor([[1.5, -2.0]]))
        assert load_tensor(path).data.tolist() == [[1.5, -2.0]]

    def test_decode_offset(self):
        first, second = encode_array(np.ones(2)), encode_array(np.zeros((1, 3), dtype=np.float32))
        array, end = decode_array(first + second, len(first))
        assert array.shape == (1, 3) and end == len(first) + len(second)

    def test_bad_magic(self):
        blob = bytearray(encode_array(np.ones(2)))
        blob[:4] = b"XXXX"
        with pytest.raises(CheckpointError):
            decode_array(bytes(blob))

    def test_bad_version(self):
        blob = bytearray(encode_array(np.ones(2)))
        blob[4:8] = struct.pack("<I", 2)
        with pytest.raises(CheckpointError):
            decode_array(bytes(blob))

    def test_truncated(self):
        with pytest.raises(CheckpointError):
            decode_array(encode_array(np.ones(4))[:-1])

    def test_trailing_bytes(self, tmp_dir):
        path = os.path.join(tmp_dir, "extra.rten")
        with open(path, "wb") as fp:
            fp.write(encode_array(np.ones(2)) + b"\x00")
        with pytest.raises(CheckpointError):
            read_array(path)

    def test_integer_arrays_rejected(self):
        with pytest.raises(CheckpointError):
            encode_array(np.arange(3))
