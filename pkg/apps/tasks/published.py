# -*- coding: utf-8 -*-
"""
NYUDv2 上公开的逐任务指标（语义分割 mIoU↑ / 深度 RMSE↓ / 法向 mErr↓ / 边界 odsF↑）
和对应的 Δm，用来校验 Δm 的实现。
"""
from collections import namedtuple

from apps.tasks.report import MetricReport

PublishedRow = namedtuple("PublishedRow", ["key", "label", "values", "delta_m"])

_COLUMNS = (
    ("semseg", "miou", True),
    ("depth", "rmse", False),
    ("normal", "merr", False),
    ("boundary", "odsf", True),
)

SINGLE_TASK = PublishedRow("single_task", "Single-task, 2*Swin", (54.32, 0.5166, 19.21, 77.30), 0.0)

# 解码器结构对比
STAGE_ROWS = (
    PublishedRow("multi_task", "Multi-task, 2*Swin", (53.72, 0.5239, 19.97, 76.50), -1.87),
    PublishedRow("stm1", "1*STM", (54.61, 0.5059, 19.00, 77.40), 0.95),
    PublishedRow("stm2", "2*STM", (54.66, 0.4984, 18.81, 78.20), 1.84),
    PublishedRow("stm3", "3*STM", (54.75, 0.5054, 18.81, 78.20), 1.55),
    PublishedRow("stm2_ctm", "2*STM+1*CTM", (55.82, 0.5066, 18.63, 78.70), 2.38),
)

# 固定门控、把 MFE / 线性门控换成窗口注意力的对比
ABLATION_ROWS = (
    PublishedRow("gate_zero", "g^t=0", (55.37, 0.5087, 18.76, 78.30), 1.77),
    PublishedRow("gate_one", "g^t=1", (54.50, 0.4981, 18.83, 78.20), 1.76),
    PublishedRow("mfe_to_wmsa", "MFE->W-MSA", (54.57, 0.5109, 19.95, 76.60), -0.79),
    PublishedRow("gate_to_wmsa", "Linear->W-MSA", (55.01, 0.4990, 18.73, 78.20), 2.08),
)

# 不同规模编码器下的结果，没有公布 Δm
ENCODER_SCALE_ROWS = (
    PublishedRow("swin_tiny", "Swin-Tiny", (49.25, 0.5299, 19.74, 76.90), None),
    PublishedRow("swin_small", "Swin-Small", (51.93, 0.5246, 19.45, 77.80), None),
    PublishedRow("swin_base", "Swin-Base", (53.62, 0.5126, 19.28, 77.70), None),
    PublishedRow("swin_large", "Swin-Large", (55.82, 0.5066, 18.63, 78.70), None),
)

DELTA_M_TOLERANCE = 0.01


def row_report(row: PublishedRow) -> MetricReport:
    report = MetricReport()
    for (task, metric, higher), value in zip(_COLUMNS, row.values):
        report.add(task, metric, value, higher)
    return report


def rows_with_delta_m():
    return [row for row in STAGE_ROWS + ABLATION_ROWS if row.delta_m is not None]
