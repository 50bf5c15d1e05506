# -*- coding: utf-8 -*-
"""
合成多任务数据集。每个场景是一个倾斜的背景平面加 2~6 个矩形/圆，每个形状有自己的深度平面
z = z0 + b·(col - cx) + c·(row - cy)，后画的形状遮挡先画的。

    segmentation  背景为 0，形状为 1..K-1
    depth         像素所在平面的深度，范围约 [0.5, 2.5]
    normal        平面的解析法向 normalize(-b, -c, 1)
    boundary      4 邻域里存在不同标签的像素为 1
    image         按类别调色板着色，亮度随深度变化，加少量噪声
"""
import os
from typing import Dict, NamedTuple

import numpy as np

from apps.enums import TaskKindEnum
from apps.harness.forms import RunConfig
from apps.tensor.rten import read_array, write_array
from config import manifest_file_name
from utils.exceptions import DataError
from utils.logs.log import logger
from utils.util.file_util import FileUtil
from utils.util.pool_util import ordered_map

SAMPLE_FIELDS = ("image", "segmentation", "depth", "normal", "boundary")
SPLITS = ("train", "val")
_PALETTE_STREAM = 2 ** 31


class SyntheticSample(NamedTuple):
    image: np.ndarray
    segmentation: np.ndarray
    depth: np.ndarray
    normal: np.ndarray
    boundary: np.ndarray


def class_palette(seed, num_classes):
    """ 每个数据集固定的类别颜色 """
    rng = np.random.default_rng([int(seed), _PALETTE_STREAM])
    return rng.uniform(0.1, 0.9, size=(num_classes, 3))


def _plane_normal(slope_x, slope_y):
    normal = np.array([-slope_x, -slope_y, 1.0])
    return normal / np.linalg.norm(normal)


def label_boundary(labels):
    """ 和上下左右任一邻居标签不同的像素 """
    edge = np.zeros(labels.shape, dtype=bool)
    vertical = labels[1:, :] != labels[:-1, :]
    horizontal = labels[:, 1:] != labels[:, :-1]
    edge[1:, :] |= vertical
    edge[:-1, :] |= vertical
    edge[:, 1:] |= horizontal
    edge[:, :-1] |= horizontal
    return edge


def generate_sample(seed, index, height, width, num_classes, palette=None) -> SyntheticSample:
    rng = np.random.default_rng([int(seed), int(index)])
    palette = class_palette(seed, num_classes) if palette is None else palette
    rows, cols = np.mgrid[0:height, 0:width].astype(np.float64)

    labels = np.zeros((height, width), dtype=np.int64)
    slope_x = np.zeros((height, width))
    slope_y = np.zeros((height, width))
    bx, by = rng.uniform(-0.002, 0.002, size=2)
    depth = 2.0 + bx * (cols - width / 2) + by * (rows - height / 2)
    slope_x[:] = bx
    slope_y[:] = by

    for _ in range(int(rng.integers(2, 7))):
        label = int(rng.integers(1, num_classes))
        if rng.random() < 0.5:
            shape_h = int(rng.integers(height // 8, height // 2 + 1))
            shape_w = int(rng.integers(width // 8, width // 2 + 1))
            top = int(rng.integers(0, height - shape_h + 1))
            left = int(rng.integers(0, width - shape_w + 1))
            mask = (rows >= top) & (rows < top + shape_h) & (cols >= left) & (cols < left + shape_w)
            center_y, center_x = top + shape_h / 2, left + shape_w / 2
        else:
            radius = rng.uniform(min(height, width) / 10, min(height, width) / 4)
            center_y, center_x = rng.uniform(0, height), rng.uniform(0, width)
            mask = (rows - center_y) ** 2 + (cols - center_x) ** 2 <= radius ** 2
        if not mask.any():
            continue
        z0 = rng.uniform(1.0, 1.8)
        sx, sy = rng.uniform(-0.004, 0.004, size=2)
        labels[mask] = label
        depth[mask] = (z0 + sx * (cols - center_x) + sy * (rows - center_y))[mask]
        slope_x[mask] = sx
        slope_y[mask] = sy

    normal = np.stack([-slope_x, -slope_y, np.ones_like(slope_x)], axis=-1)
    normal /= np.linalg.norm(normal, axis=-1, keepdims=True)
    shade = (1.3 - 0.25 * depth)[..., None]
    image = palette[labels] * shade + rng.normal(0.0, 0.02, size=(height, width, 3))

    return SyntheticSample(
        image=image.astype(np.float32),
        segmentation=labels.astype(np.float32),
        depth=depth.astype(np.float32),
        normal=normal.astype(np.float32),
        boundary=label_boundary(labels).astype(np.float32),
    )


def _generate_split(cfg: RunConfig, start, count, palette) -> Dict[str, np.ndarray]:
    height, width = cfg.image_size
    samples = ordered_map(
        lambda index: generate_sample(cfg.seed, index, height, width, cfg.num_classes, palette),
        range(start, start + count),
    )
    return {field: np.stack([getattr(sample, field) for sample in samples]) for field in SAMPLE_FIELDS}


def generate_dataset(cfg: RunConfig, n_train=None, n_val=None, out_dir=None) -> Dict[str, Dict[str, np.ndarray]]:
    """ 样本下标：训练集 [0, n_train)，验证集接着往后编号；写 RTEN 文件和 manifest.json """
    n_train = cfg.n_train if n_train is None else n_train
    n_val = cfg.n_val if n_val is None else n_val
    out_dir = out_dir or cfg.data_dir
    palette = class_palette(cfg.seed, cfg.num_classes)
    manifest = {
        "seed": cfg.seed,
        "image_size": list(cfg.image_size),
        "num_classes": cfg.num_classes,
        "splits": {},
    }
    dataset = {}
    for split, start, count in (("train", 0, n_train), ("val", n_train, n_val)):
        arrays = _generate_split(cfg, start, count, palette)
        split_dir = os.path.join(out_dir, split)
        FileUtil.check_dir(split_dir)
        files = {}
        for field, array in arrays.items():
            path = os.path.join(split_dir, f"{field}.rten")
            write_array(path, array)
            files[field] = {
                "path": f"{split}/{field}.rten",
                "shape": list(array.shape),
                "sha256": FileUtil.sha256(path),
            }
        manifest["splits"][split] = {"count": count, "first_index": start, "files": files}
        dataset[split] = arrays
    FileUtil.save_json(os.path.join(out_dir, manifest_file_name), manifest)
    logger.info(f"合成数据集已生成：{out_dir}（train={n_train}, val={n_val}）")
    return dataset


def dataset_exists(data_dir):
    return os.path.exists(os.path.join(data_dir, manifest_file_name))


def load_dataset(data_dir, verify=True) -> Dict[str, Dict[str, np.ndarray]]:
    manifest_path = os.path.join(data_dir, manifest_file_name)
    if not os.path.exists(manifest_path):
        raise DataError(f"数据集目录下没有 {manifest_file_name}：{data_dir}")
    manifest = FileUtil.load_json(manifest_path)
    dataset = {}
    for split, info in manifest["splits"].items():
        arrays = {}
        for field, item in info["files"].items():
            path = os.path.join(data_dir, item["path"])
            if verify and FileUtil.sha256(path) != item["sha256"]:
                raise DataError(f"数据文件校验失败：{path}")
            arrays[field] = read_array(path)
        dataset[split] = arrays
    return dataset


def task_targets(arrays: Dict[str, np.ndarray], index=None) -> Dict[str, np.ndarray]:
    """ 取出各任务的目标，index 为 batch 下标 """
    pick = (lambda array: array) if index is None else (lambda array: array[index])
    return {kind.value: pick(arrays[kind.value]) for kind in TaskKindEnum}
