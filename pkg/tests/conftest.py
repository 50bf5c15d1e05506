# -*- coding: utf-8 -*-
import numpy as np
import pytest

from apps.tensor.tensor import default_dtype, reset_tape


@pytest.fixture(autouse=True)
def clean_tape():
    """ 每个用例从一条空 tape 开始 """
    reset_tape()
    yield
    reset_tape()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def float64():
    """ 梯度校验和逐位比较在 64 位下进行 """
    with default_dtype("float64"):
        yield


@pytest.fixture
def tmp_dir(tmp_path):
    return str(tmp_path)
