# -*- coding: utf-8 -*-
"""
自检套件，每个套件由若干检查项组成，任何一项失败整个套件失败：

    scan        chunked 扫描和逐步递推在整个网格上一致
    discretize  离散化的标量值，以及欧拉近似相对精确零阶保持的误差阶
    grad        各层的有限差分梯度校验
    identity    零初始化的残差投影让 STM/CTM 在初始化时是严格恒等映射
    ss2d        各方向的因果性、四方向分解、旋转/转置/水平翻转下的方向重标号
    delta_m     用公开的逐任务指标复现 Δm
    shapes      编码器/解码器/上采样/输出头的形状，以及各预设参数量的大小关系
"""
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel as pydanticBaseModel, Field

from apps.blocks.ctm import CTMBlock, ctm_forward
from apps.blocks.mfe import MFE, mfe_forward
from apps.blocks.patch_expand import PatchExpand, patch_expand
from apps.blocks.stm import STMBlock, stm_forward
from apps.decoder.encoder import ToyEncoder, toy_encoder_forward
from apps.decoder.model import MTMamba, decoder_forward
from apps.decoder.stage import DecoderStage, stage_forward
from apps.enums import PresetEnum, TaskKindEnum, VerifySuiteEnum
from apps.harness.forms import make_config
from apps.harness.presets import apply_preset, build_model
from apps.ssm.discretize import discretize, exact_zoh_b
from apps.ssm.params import SSMParams
from apps.ssm.s6 import s6_forward
from apps.ssm.scan import NAIVE, ScanConfig, max_rel_err
from apps.ssm.ss2d import direction_orders, ss2d, ss2d_directions
from apps.ssm.bench import scan_oracle_grid
from apps.tasks.heads import TaskHead, head_forward
from apps.tasks.published import DELTA_M_TOLERANCE, SINGLE_TASK, row_report, rows_with_delta_m
from apps.tasks.report import delta_m
from apps.tasks.task_spec import TaskSpec
from apps.tensor import ops
from apps.tensor.grad_check import gradient_check, jitter_zero_parameters
from apps.tensor.tensor import Tensor, default_dtype, no_grad, reset_tape
from utils.logs.log import logger

SCAN_TOLERANCE = {"float32": 1e-5, "float64": 1e-12}
GRAD_TOLERANCE = 1e-4
MODEL_GRAD_TOLERANCE = 1e-3
SS2D_TOLERANCE = 1e-12
_GRAD_COORDS = 100


class CheckResult(pydanticBaseModel):
    name: str = Field(..., title="检查项")
    passed: bool = Field(..., title="是否通过")
    value: Optional[float] = Field(None, title="实测误差")
    tol: Optional[float] = Field(None, title="阈值")
    detail: str = Field("", title="说明")


class SuiteResult(pydanticBaseModel):
    suite: VerifySuiteEnum = Field(..., title="套件")
    checks: List[CheckResult] = Field(default_factory=list, title="检查项结果")

    @property
    def passed(self):
        return bool(self.checks) and all(check.passed for check in self.checks)


class VerifyReport(pydanticBaseModel):
    suites: List[SuiteResult] = Field(default_factory=list, title="各套件结果")

    @property
    def passed(self):
        return all(suite.passed for suite in self.suites)

    def failed_checks(self) -> List[str]:
        return [f"{suite.suite.value}.{check.name}" for suite in self.suites for check in suite.checks if not check.passed]


def _within(name, value, tol, detail="") -> CheckResult:
    value = float(value)
    return CheckResult(name=name, passed=bool(np.isfinite(value) and value <= tol), value=value, tol=tol, detail=detail)


def _expect(name, ok, detail="") -> CheckResult:
    return CheckResult(name=name, passed=bool(ok), detail=detail)


def _max_abs(a, b):
    return float(np.max(np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))))


def _random(rng, *shape):
    return Tensor(rng.standard_normal(shape))


def _projected_loss(outputs: Sequence[Tensor], projections: Sequence[np.ndarray]) -> Tensor:
    """ Σ Σ w⊙out，w 按元素个数缩放，让 loss 保持在 O(1) """
    total = None
    for output, projection in zip(outputs, projections):
        term = ops.sum(ops.mul(output, Tensor(projection)))
        total = term if total is None else ops.add(total, term)
    return total


def _projections(rng, outputs: Sequence[Tensor]):
    return [rng.standard_normal(output.shape) / np.sqrt(output.size) for output in outputs]


def _tiny_tasks():
    return [TaskSpec.from_kind(TaskKindEnum.segmentation, 3), TaskSpec.from_kind(TaskKindEnum.depth)]


# ====================== scan ======================
def suite_scan(seeds=range(20)) -> List[CheckResult]:
    checks = []
    for dtype, tol in SCAN_TOLERANCE.items():
        worst = scan_oracle_grid(seeds=seeds, dtype=dtype)
        checks.append(_within(f"chunked_vs_naive_{dtype}", worst, tol, f"{len(list(seeds))} 个种子"))
    return checks


# ====================== discretize ======================
def suite_discretize(draws=10, seed=0) -> List[CheckResult]:
    a_bar, b_bar = discretize(Tensor([[-1.0]]), Tensor([[[1.0]]]), Tensor([[[0.1]]]))
    checks = [
        _within("scalar_a_bar", abs(a_bar.item() - np.exp(-0.1)), 1e-12),
        _within("scalar_b_bar", abs(b_bar.item() - 0.1), 1e-12),
    ]
    rng = np.random.default_rng(seed)
    worst_ratio = 0.0
    for _ in range(draws):
        channels, state_size, length = 3, 4, 5
        A = -rng.uniform(0.5, 2.0, size=(channels, state_size))
        B = rng.standard_normal((1, length, state_size))
        delta = rng.uniform(0.05, 0.2, size=(1, length, channels))
        gaps = []
        for scale in (1.0, 0.5):
            euler = discretize(Tensor(A), Tensor(B), Tensor(delta * scale))[1].data
            gaps.append(_max_abs(euler, exact_zoh_b(A, B, delta * scale)))
        worst_ratio = max(worst_ratio, gaps[1] / gaps[0])
    checks.append(_within("euler_gap_halves", worst_ratio, 0.5, f"{draws} 次随机抽样中 gap(Δ/2)/gap(Δ) 的最大值"))
    return checks


# ====================== grad ======================
def _grad_case(name, modules, build: Callable[[], Sequence[Tensor]], inputs: Sequence[Tensor], rng, tol=GRAD_TOLERANCE):
    """ build 执行前向并返回输出列表；检查的张量包括输入和各模块的全部参数 """
    for module in modules:
        jitter_zero_parameters(module, rng)
    for tensor in inputs:
        tensor.requires_grad = True
    with no_grad():
        projections = _projections(rng, build())
    tensors = [(f"input{index}", tensor) for index, tensor in enumerate(inputs)]
    for index, module in enumerate(modules):
        tensors += [(f"m{index}.{key}", param) for key, param in module.named_parameters()]
    report = gradient_check(
        lambda: _projected_loss(build(), projections), tensors, n_coords=_GRAD_COORDS, rng=rng, tol=tol, name=name
    )
    return _within(name, report.max_rel_err, tol, f"{report.checked} 个坐标，最差 {report.worst}")


def suite_grad(seed=0) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    cfg = ScanConfig(chunk_len=4)
    checks = []

    params = SSMParams(3, 2).reset_parameters(seed)
    x = _random(rng, 1, 7, 3)
    checks.append(_grad_case("s6_forward", [params], lambda: [s6_forward(x, params, cfg)], [x], rng))

    directions = [SSMParams(2, 2) for _ in range(4)]
    for index, item in enumerate(directions):
        item.reset_parameters(seed + index)
    z = _random(rng, 1, 2, 3, 2)
    checks.append(_grad_case("ss2d", directions, lambda: [ss2d(z, directions, cfg)], [z], rng))

    mfe = MFE(2, 2, alpha=2, state_size=2, scan_cfg=cfg).reset_parameters(seed)
    z = _random(rng, 1, 2, 3, 2)
    checks.append(_grad_case("mfe_forward", [mfe], lambda: [mfe_forward(z, mfe)], [z], rng))

    stm = STMBlock(2, alpha=2, state_size=2, scan_cfg=cfg).reset_parameters(seed)
    z = _random(rng, 1, 2, 2, 2)
    checks.append(_grad_case("stm_forward", [stm], lambda: [stm_forward(z, stm)], [z], rng))

    ctm = CTMBlock(2, 2, alpha=2, state_size=2, scan_cfg=cfg).reset_parameters(seed)
    z1, z2 = _random(rng, 1, 2, 2, 2), _random(rng, 1, 2, 2, 2)
    checks.append(_grad_case("ctm_forward", [ctm], lambda: ctm_forward([z1, z2], ctm), [z1, z2], rng))

    head = TaskHead(2, TaskSpec.from_kind(TaskKindEnum.segmentation, 3)).reset_parameters(seed)
    z = _random(rng, 1, 2, 2, 2)
    checks.append(_grad_case("head_forward", [head], lambda: [head_forward(z, head)], [z], rng))

    model = MTMamba(_tiny_tasks(), 2, stm_count=1, alpha=1, state_size=2, scan_cfg=cfg).reset_parameters(seed)
    image = _random(rng, 1, 32, 32, 3)
    checks.append(_grad_case(
        "full_model", [model], lambda: list(model(image).values()), [image], rng, tol=MODEL_GRAD_TOLERANCE
    ))
    return checks


# ====================== identity ======================
def suite_identity(seed=0) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    checks = []
    with no_grad():
        stm = STMBlock(4, alpha=2, state_size=4).reset_parameters(seed)
        z = _random(rng, 2, 4, 4, 4)
        checks.append(_expect("stm", np.array_equal(stm_forward(z, stm).data, z.data)))

        ctm = CTMBlock(3, 4, alpha=2, state_size=4).reset_parameters(seed)
        features = [_random(rng, 2, 4, 4, 4) for _ in range(3)]
        outputs = ctm_forward(features, ctm)
        checks.append(_expect("ctm", all(np.array_equal(o.data, f.data) for o, f in zip(outputs, features))))

        model = MTMamba(_tiny_tasks(), 4, stm_count=2, state_size=4).reset_parameters(seed)
        feats = toy_encoder_forward(_random(rng, 1, 64, 64, 3), model.encoder)
        _, intermediates = decoder_forward(feats, model.decoder, return_stages=True)
        prev = [feats.f4] * len(model.tasks)
        for index, (stage, skip, outputs) in enumerate(zip(model.decoder.stages(), (feats.f3, feats.f2, feats.f1), intermediates)):
            fused = [
                branch.fuse(ops.concat([patch_expand(feature, branch.expand), skip], axis=-1))
                for branch, feature in zip(stage.branch, prev)
            ]
            same = all(np.array_equal(o.data, f.data) for o, f in zip(outputs, fused))
            checks.append(_expect(f"stage{index + 1}", same, "STM 链和 CTM 不改变融合后的特征"))
            prev = outputs
    return checks


# ====================== ss2d ======================
def _ss2d_params(seed, channels, state_size):
    return [SSMParams(channels, state_size).reset_parameters(seed + index) for index in range(4)]


def _relabel(params, order):
    return [params[index] for index in order]


def suite_ss2d(seed=0) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    cfg = ScanConfig(chunk_len=4)
    channels, state_size, height, width = 3, 4, 3, 5
    params = _ss2d_params(seed, channels, state_size)
    checks = []
    with no_grad():
        z = _random(rng, 1, height, width, channels)
        base = ss2d_directions(z, params, cfg)

        # 扰动某方向第 k 个位置，该方向前 k 个位置的输出不变
        worst = 0.0
        for direction, order in enumerate(direction_orders(height, width)):
            k = len(order) // 2
            row, col = divmod(int(order[k]), width)
            bumped = z.data.copy()
            bumped[0, row, col] += 1.0
            after = ss2d_directions(Tensor(bumped), params, cfg)[direction].data.reshape(1, -1, channels)
            before = base[direction].data.reshape(1, -1, channels)
            worst = max(worst, _max_abs(after[:, order[:k]], before[:, order[:k]]))
        checks.append(_within("causality", worst, SS2D_TOLERANCE))

        total = base[0].data + base[1].data + base[2].data + base[3].data
        checks.append(_within("decomposition", _max_abs(ss2d(z, params, cfg).data, total), SS2D_TOLERANCE))

        reference = ss2d(z, params, cfg).data
        rotated = ss2d(Tensor(z.data[:, ::-1, ::-1]), _relabel(params, (1, 0, 3, 2)), cfg).data
        checks.append(_within("rot180", max_rel_err(rotated, reference[:, ::-1, ::-1]), SS2D_TOLERANCE))

        transposed = ss2d(Tensor(z.data.transpose(0, 2, 1, 3)), _relabel(params, (2, 3, 0, 1)), cfg).data
        checks.append(_within("transpose", max_rel_err(transposed, reference.transpose(0, 2, 1, 3)), SS2D_TOLERANCE))

        # 只有一行时 d3 和 d1 的遍历顺序相同，水平翻转才是方向对换
        row_input = _random(rng, 1, 1, 2 * width, channels)
        flat_reference = ss2d(row_input, params, cfg).data
        flipped = ss2d(Tensor(row_input.data[:, :, ::-1]), _relabel(params, (1, 0, 3, 2)), cfg).data
        checks.append(_within("hflip_single_row", max_rel_err(flipped, flat_reference[:, :, ::-1]), SS2D_TOLERANCE))

        naive = ss2d(z, params, NAIVE).data
        checks.append(_within("chunked_matches_naive", max_rel_err(reference, naive), SS2D_TOLERANCE))
    return checks


# ====================== delta_m ======================
def suite_delta_m() -> List[CheckResult]:
    baseline = row_report(SINGLE_TASK)
    checks = []
    for row in rows_with_delta_m():
        value = delta_m(row_report(row), baseline)
        checks.append(_within(row.key, abs(value - row.delta_m), DELTA_M_TOLERANCE, f"{row.label}: {value:+.2f}"))
    return checks


# ====================== shapes ======================
def suite_shapes(seed=0) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    width = 4
    checks = []
    with no_grad():
        encoder = ToyEncoder(width).reset_parameters(seed)
        feats = toy_encoder_forward(_random(rng, 1, 64, 64, 3), encoder)
        expected = [(1, 16, 16, width), (1, 8, 8, 2 * width), (1, 4, 4, 4 * width), (1, 2, 2, 8 * width)]
        checks.append(_expect("encoder", [item.shape for item in feats] == expected, str([item.shape for item in feats])))

        model = MTMamba(_tiny_tasks(), width, stm_count=1, state_size=2).reset_parameters(seed)
        features, intermediates = decoder_forward(feats, model.decoder, return_stages=True)
        stage_shapes = [outputs[0].shape for outputs in intermediates]
        checks.append(_expect(
            "decoder",
            stage_shapes == [(1, 4, 4, 4 * width), (1, 8, 8, 2 * width), (1, 16, 16, width)]
            and all(item.shape == (1, 16, 16, width) for item in features),
            str(stage_shapes),
        ))

        layer = PatchExpand(8).reset_parameters(seed)
        out = patch_expand(_random(rng, 1, 2, 3, 8), layer)
        checks.append(_expect("patch_expand", out.shape == (1, 4, 6, 4), str(out.shape)))

        outputs = [head_forward(feature, head) for feature, head in zip(features, model.heads)]
        checks.append(_expect(
            "heads", [item.shape for item in outputs] == [(1, 64, 64, 3), (1, 64, 64, 1)], str([item.shape for item in outputs])
        ))

        stage = DecoderStage(4 * width, 2, stm_count=1, state_size=2).reset_parameters(seed)
        stage_out = stage_forward([feats.f3, feats.f3], feats.f2, stage)
        checks.append(_expect("stage", all(item.shape == feats.f2.shape for item in stage_out)))

    cfg = make_config(base_width=width, state_size=2, dtype="float64")
    counts = {preset: build_model(apply_preset(cfg, preset)).num_parameters() for preset in PresetEnum}
    ordered = counts[PresetEnum.stm1] < counts[PresetEnum.stm2] < counts[PresetEnum.stm3] < counts[PresetEnum.stm2_ctm]
    checks.append(_expect("preset_parameter_order", ordered, str({key.value: value for key, value in counts.items()})))

    plain = set(build_model(apply_preset(cfg, PresetEnum.stm2)).parameter_names())
    with_ctm = set(build_model(apply_preset(cfg, PresetEnum.stm2_ctm)).parameter_names())
    extra = with_ctm - plain
    checks.append(_expect(
        "ctm_parameter_diff",
        plain < with_ctm and all(".ctm." in name for name in extra),
        f"多出 {len(extra)} 个参数",
    ))
    return checks


_SUITES: Dict[VerifySuiteEnum, Callable[..., List[CheckResult]]] = {
    VerifySuiteEnum.scan: suite_scan,
    VerifySuiteEnum.discretize: suite_discretize,
    VerifySuiteEnum.grad: suite_grad,
    VerifySuiteEnum.identity: suite_identity,
    VerifySuiteEnum.ss2d: suite_ss2d,
    VerifySuiteEnum.delta_m: suite_delta_m,
    VerifySuiteEnum.shapes: suite_shapes,
}


def run_suite(suite, seeds=range(20)) -> SuiteResult:
    suite = VerifySuiteEnum(suite)
    reset_tape()
    try:
        with default_dtype("float64"):
            checks = _SUITES[suite](seeds) if suite == VerifySuiteEnum.scan else _SUITES[suite]()
    except Exception as error:
        logger.exception(f"套件 {suite.value} 执行出错")
        checks = [_expect("error", False, f"{type(error).__name__}: {error}")]
    finally:
        reset_tape()
    result = SuiteResult(suite=suite, checks=checks)
    for check in checks:
        value = "" if check.value is None else f" {check.value:.3e} (≤ {check.tol:g})"
        (logger.info if check.passed else logger.error)(
            f"[{suite.value}] {check.name}: {'PASS' if check.passed else 'FAIL'}{value} {check.detail}".rstrip()
        )
    return result


def run_verify(suites: Optional[Sequence] = None, seeds=range(20)) -> VerifyReport:
    """ 按顺序执行套件，不传则执行全部 """
    suites = [VerifySuiteEnum(item) for item in suites] if suites else list(VerifySuiteEnum)
    report = VerifyReport(suites=[run_suite(suite, seeds) for suite in suites])
    if report.passed:
        logger.info(f"自检通过：{', '.join(suite.value for suite in suites)}")
    else:
        logger.error(f"自检失败：{report.failed_checks()}")
    return report
