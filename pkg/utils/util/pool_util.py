# -*- coding: utf-8 -*-
from concurrent.futures import ThreadPoolExecutor

from config import _threads


def worker_count(limit=None):
    """ 线程数取 MTMAMBA_THREADS 和调用方上限的较小值 """
    return max(1, min(_threads, limit or _threads))


def ordered_map(func, items, workers=None):
    """ 按下标分配任务，结果按输入顺序返回，和线程数无关 """
    items = list(items)
    workers = worker_count(workers)
    if workers == 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def chunk_indices(count, workers):
    """ 把 [0, count) 切成 workers 段连续下标，第 i 段固定给第 i 个worker """
    workers = max(1, min(workers, count)) if count else 1
    size, rest = divmod(count, workers)
    bounds, start = [], 0
    for index in range(workers):
        end = start + size + (1 if index < rest else 0)
        bounds.append(range(start, end))
        start = end
    return bounds
