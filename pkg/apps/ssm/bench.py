# -*- coding: utf-8 -*-
"""
扫描实现的基准测试和基准对照网格。
"""
import csv
import itertools
import time
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel as pydanticBaseModel, Field

from apps.enums import ScanModeEnum
from apps.ssm.scan import ScanConfig, max_rel_err, scan_states
from apps.tensor.tensor import to_np_dtype
from utils.exceptions import UsageError
from utils.logs.log import logger

BENCH_HEADER = ("mode", "L", "C", "N", "chunk", "wall_ms", "elems_per_s", "max_rel_err")
BENCH_LENGTHS = (256, 1024, 4096, 16384)

GRID_BATCHES = (1, 2)
GRID_LENGTHS = (1, 7, 64, 1024)
GRID_CHANNELS = (1, 8)
GRID_STATES = (1, 16)
GRID_CHUNKS = (1, 16, 64, 4096)


class BenchRow(pydanticBaseModel):
    mode: ScanModeEnum = Field(..., title="扫描实现")
    L: int = Field(..., title="序列长度")
    C: int = Field(..., title="通道数")
    N: int = Field(..., title="状态维度")
    chunk: int = Field(..., title="分块长度，naive 记为 0")
    wall_ms: float = Field(..., title="单次扫描耗时(毫秒)")
    elems_per_s: float = Field(..., title="每秒状态更新数 B·L·C·N")
    max_rel_err: float = Field(..., title="相对 naive 的最大误差")

    def to_csv_row(self):
        return [
            self.mode.value, self.L, self.C, self.N, self.chunk,
            f"{self.wall_ms:.4f}", f"{self.elems_per_s:.1f}", f"{self.max_rel_err:.3e}"
        ]


def random_scan_inputs(rng, batch, length, channels, state_size, dtype=np.float32):
    """ Ā 取 (0.5, 1) 内的随机衰减，u = B̄·x 取标准正态 """
    shape = (batch, length, channels, state_size)
    a = rng.uniform(0.5, 0.999, size=shape).astype(dtype)
    u = rng.standard_normal(shape).astype(dtype)
    return a, u


def _time_scan(a, u, cfg: ScanConfig, warmup, repeats):
    for _ in range(warmup):
        scan_states(a, u, cfg)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        states = scan_states(a, u, cfg)
        best = min(best, time.perf_counter() - start)
    return states, best


def bench_scan(
        lengths: Sequence[int] = BENCH_LENGTHS,
        channels: Sequence[int] = (16,),
        states: Sequence[int] = (16,),
        chunks: Sequence[int] = (64,),
        batch=1,
        warmup=3,
        repeats=3,
        dtype="float32",
        seed=0
) -> List[BenchRow]:
    """ 每个 (L, C, N) 先跑一行 naive，再对每个分块长度跑一行 chunked """
    if warmup < 3:
        raise UsageError(f"warmup 至少 3 次，收到 {warmup}")
    np_dtype = to_np_dtype(dtype)
    rng = np.random.default_rng(seed)
    rows = []
    for length, width, state_size in itertools.product(lengths, channels, states):
        a, u = random_scan_inputs(rng, batch, length, width, state_size, np_dtype)
        elems = batch * length * width * state_size
        reference, seconds = _time_scan(a, u, ScanConfig(mode=ScanModeEnum.naive), warmup, repeats)
        rows.append(BenchRow(
            mode=ScanModeEnum.naive, L=length, C=width, N=state_size, chunk=0,
            wall_ms=seconds * 1e3, elems_per_s=elems / max(seconds, 1e-12), max_rel_err=0.0
        ))
        naive_seconds = seconds
        for chunk in chunks:
            result, seconds = _time_scan(a, u, ScanConfig(mode=ScanModeEnum.chunked, chunk_len=chunk), warmup, repeats)
            rows.append(BenchRow(
                mode=ScanModeEnum.chunked, L=length, C=width, N=state_size, chunk=chunk,
                wall_ms=seconds * 1e3, elems_per_s=elems / max(seconds, 1e-12),
                max_rel_err=max_rel_err(result, reference)
            ))
            logger.info(f"L={length} C={width} N={state_size} chunk={chunk}: chunked/naive 加速比 {naive_seconds / max(seconds, 1e-12):.2f}")
    return rows


def write_bench_csv(rows: Sequence[BenchRow], path):
    with open(path, "w", encoding="utf-8", newline="") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(BENCH_HEADER)
        for row in rows:
            writer.writerow(row.to_csv_row())


def scan_oracle_grid(seeds=range(20), dtype="float32", chunks=GRID_CHUNKS, lengths=GRID_LENGTHS) -> float:
    """ 在整个网格上比较 chunked 和 naive，返回最大相对误差 """
    np_dtype = to_np_dtype(dtype)
    worst = 0.0
    for seed in seeds:
        rng = np.random.default_rng([int(seed), 7])
        for batch, length, width, state_size in itertools.product(GRID_BATCHES, lengths, GRID_CHANNELS, GRID_STATES):
            a, u = random_scan_inputs(rng, batch, length, width, state_size, np_dtype)
            reference = scan_states(a, u, ScanConfig(mode=ScanModeEnum.naive))
            for chunk in chunks:
                result = scan_states(a, u, ScanConfig(mode=ScanModeEnum.chunked, chunk_len=chunk))
                worst = max(worst, max_rel_err(result, reference))
    logger.debug(f"扫描网格 dtype={np_dtype.__name__} 最大相对误差 {worst:.3e}")
    return worst
