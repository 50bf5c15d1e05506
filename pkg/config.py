# -*- coding: utf-8 -*-
import os

_basedir = os.path.abspath(os.path.dirname(__file__))

platform_name = "mtmamba"  # 命令行程序名字

# 运行时开关，全部可以通过环境变量覆盖
_threads = max(1, int(os.environ.get("MTMAMBA_THREADS", "1") or 1))  # 数据生成/评估的线程池上限
_log_level = os.environ.get("MTMAMBA_LOG_LEVEL", "INFO").upper()
_log_dir = os.environ.get("MTMAMBA_LOG_DIR") or None  # 不设置则只输出到控制台
_debug = os.environ.get("MTMAMBA_DEBUG", "0") not in ("", "0", "false", "False")  # 开启后断言 Ā 落在 (0,1)

# 默认产物目录
_default_data_dir = os.path.join(_basedir, "data")
_default_out_dir = os.path.join(_basedir, "runs")

# 数值相关的默认值
layer_norm_eps = 1e-5
default_state_size = 16
default_alpha = 2
default_chunk_len = 64
default_conv_kernel = 3
ignore_label = 255
softplus_threshold = 20.0  # 超过该值 softplus(x) 直接取 x，防止 exp 溢出
delta_init_range = (0.001, 0.1)  # softplus(delta_bias) 初始化的对数均匀区间

# 优化器 / 学习率默认值
default_lr = 1e-4
default_weight_decay = 1e-5
default_betas = (0.9, 0.999)
default_adam_eps = 1e-8
default_poly_power = 0.9

# 产物文件名
config_file_name = "run.cfg"
metrics_log_name = "metrics.jsonl"
final_checkpoint_name = "final.mtmb"
best_checkpoint_name = "best.mtmb"
last_good_checkpoint_name = "last_good.mtmb"
manifest_file_name = "manifest.json"
