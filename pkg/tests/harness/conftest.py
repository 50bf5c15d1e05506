# -*- coding: utf-8 -*-
import os

import pytest

from apps.harness.forms import make_config
from apps.harness.trainer import train


def _tiny_config(root, **values):
    """ 几秒内能跑完的最小配置 """
    options = dict(
        seed=3, image_size=(32, 32), base_width=2, state_size=2, alpha=1, stm_per_stage=1, num_classes=3,
        chunk_len=16, iterations=3, batch_size=2, n_train=4, n_val=3, eval_every=2, save_every=2, lr=1e-3,
        dtype="float64", data_dir=os.path.join(root, "data"), out_dir=os.path.join(root, "run"),
    )
    options.update(values)
    return make_config(**options)


@pytest.fixture
def tiny_config():
    return _tiny_config


@pytest.fixture(scope="module")
def trained_run(tmp_path_factory):
    root = str(tmp_path_factory.mktemp("trained"))
    cfg = _tiny_config(root)
    return cfg, train(cfg)
