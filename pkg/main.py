# -*- coding: utf-8 -*-
"""
命令行入口：
    mtmamba train --config run.cfg [--preset stm2_ctm] [--out runs/x]
    mtmamba eval --ckpt runs/x/final.mtmb --data data [--split val] [--baseline single.json]
    mtmamba verify [--suite scan --suite grad]
    mtmamba bench --out bench.csv
    mtmamba gen-data --config run.cfg --out data
    mtmamba params --config run.cfg
业务异常统一打印日志后以退出码 2 结束，自检失败退出码为 1。
"""
import functools
import sys

import click

from apps.enums import PresetEnum, TaskKindEnum, VerifySuiteEnum
from apps.harness.evaluate import evaluate as run_evaluate
from apps.harness.forms import load_config, make_config, update_config
from apps.harness.presets import apply_preset, preset_parameter_counts
from apps.harness.synthetic import generate_dataset
from apps.harness.trainer import train as run_train
from apps.harness.verify import run_verify
from apps.ssm.bench import bench_scan, write_bench_csv
from config import platform_name
from utils.exceptions import MyBaseError
from utils.logs.log import coloring, logger
from utils.util.file_util import FileUtil
from utils.util.json_util import JsonUtil


def handle_errors(func):
    """ MyBaseError 打日志并以 2 退出，其余异常照常抛出 """

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except MyBaseError as error:
            logger.error(f"{type(error).__name__}: {error}")
            sys.exit(2)

    return wrapper


def _read_config(path):
    return load_config(path) if path else make_config()


def _int_list(text):
    return [int(item) for item in text.split(",") if item.strip()]


@click.group(name=platform_name)
def cli():
    pass


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="key=value 配置文件")
@click.option("--preset", type=click.Choice(PresetEnum.get_value_tuple()), default=None, help="解码器结构预设")
@click.option("--task", type=click.Choice(TaskKindEnum.get_value_tuple()), default=None, help="single_task 预设保留的任务")
@click.option("--out", "out_dir", default=None, help="产物目录，覆盖配置里的 out_dir")
@handle_errors
def train(config_path, preset, task, out_dir):
    """ 训练，产物写到 out_dir """
    cfg = _read_config(config_path)
    if preset:
        cfg = apply_preset(cfg, preset, task)
    if out_dir:
        cfg = update_config(cfg, out_dir=out_dir)
    logger.info(f"========== 开始训练：{cfg.out_dir} ==========")
    result = run_train(cfg)
    click.echo(JsonUtil.dumps(result.model_dump()))
    logger.info("========== 训练完成 ==========")


@cli.command(name="eval")
@click.option("--ckpt", "checkpoint", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--split", default="val", show_default=True)
@click.option("--config", "config_path", default=None, type=click.Path(exists=True, dir_okay=False), help="默认读权重旁边的 run.cfg")
@click.option("--baseline", default=None, type=click.Path(exists=True, dir_okay=False), help="单任务基线的指标 JSON")
@click.option("--out", "out_path", default=None, help="指标 JSON 的保存路径")
@handle_errors
def evaluate(checkpoint, data_dir, split, config_path, baseline, out_path):
    """ 在数据集上评估权重，输出各任务指标（和 Δm） """
    cfg = load_config(config_path) if config_path else None
    report = run_evaluate(checkpoint, data_dir, split=split, cfg=cfg, baseline=baseline)
    if out_path:
        FileUtil.save_json(out_path, report.to_json())
    click.echo(report.dumps())


@cli.command()
@click.option("--suite", "suites", multiple=True, type=click.Choice(VerifySuiteEnum.get_value_tuple()), help="可重复，默认全部")
@click.option("--seeds", default=20, show_default=True, help="扫描网格的种子个数")
@handle_errors
def verify(suites, seeds):
    """ 运行自检套件，任何一项失败退出码为 1 """
    report = run_verify(suites or None, seeds=range(seeds))
    for suite in report.suites:
        click.echo(coloring(f"{suite.suite.value}: {'PASS' if suite.passed else 'FAIL'}", "GREEN" if suite.passed else "RED"))
    sys.exit(0 if report.passed else 1)


@cli.command()
@click.option("--out", "out_path", required=True, help="CSV 输出路径")
@click.option("--lengths", default="256,1024,4096,16384", show_default=True, help="逗号分隔的序列长度")
@click.option("--chunks", default="64", show_default=True, help="逗号分隔的分块长度")
@click.option("--dtype", type=click.Choice(["float32", "float64"]), default="float32", show_default=True)
@handle_errors
def bench(out_path, lengths, chunks, dtype):
    """ chunked 和 naive 扫描的耗时对比 """
    rows = bench_scan(lengths=_int_list(lengths), chunks=_int_list(chunks), dtype=dtype)
    write_bench_csv(rows, out_path)
    logger.info(f"基准结果已写入 {out_path}，共 {len(rows)} 行")


@cli.command(name="gen-data")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, help="数据集目录")
@handle_errors
def gen_data(config_path, out_dir):
    """ 生成合成数据集 """
    cfg = _read_config(config_path)
    generate_dataset(cfg, out_dir=out_dir)


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@handle_errors
def params(config_path):
    """ 各预设的参数量 """
    counts = preset_parameter_counts(_read_config(config_path))
    for name, count in counts.items():
        click.echo(f"{name}\t{count}")


if __name__ == "__main__":
    cli()
