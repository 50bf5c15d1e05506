from enum import Enum


class BaseEnum(Enum):

    @classmethod
    def get_value_tuple(cls):
        return tuple(filed.value for filed in cls)


class DtypeEnum(str, BaseEnum):
    """ 张量精度，RTEN 文件里的 dtype code 见 code 属性 """
    float32 = "float32"
    float64 = "float64"

    @property
    def code(self):
        return 0 if self is DtypeEnum.float32 else 1


class ActivationKindEnum(str, BaseEnum):
    silu = "silu"
    sigmoid = "sigmoid"
    softplus = "softplus"


class ScanModeEnum(str, BaseEnum):
    """ 扫描实现，naive 为逐步递推的基准实现 """
    naive = "naive"
    chunked = "chunked"


class TaskKindEnum(str, BaseEnum):
    segmentation = "segmentation"
    depth = "depth"
    normal = "normal"
    boundary = "boundary"


class LossKindEnum(str, BaseEnum):
    cross_entropy = "cross_entropy"
    l1 = "l1"


class MetricKindEnum(str, BaseEnum):
    miou = "miou"
    rmse = "rmse"
    merr = "merr"
    f1 = "f1"


class CTMGateModeEnum(str, BaseEnum):
    """ CTM 融合门控：adaptive 为 sigmoid 门控；task_only 固定 g=1；shared_only 固定 g=0 """
    adaptive = "adaptive"
    task_only = "task_only"
    shared_only = "shared_only"


class PresetEnum(str, BaseEnum):
    """ 解码器每个stage的结构预设 """
    single_task = "single_task"
    stm1 = "stm1"
    stm2 = "stm2"
    stm3 = "stm3"
    stm2_ctm = "stm2_ctm"


class EncoderScaleEnum(str, BaseEnum):
    toy_tiny = "toy_tiny"
    toy_small = "toy_small"
    toy_base = "toy_base"
    toy_large = "toy_large"

    @property
    def base_width(self):
        return {"toy_tiny": 8, "toy_small": 16, "toy_base": 24, "toy_large": 32}[self.value]


class VerifySuiteEnum(str, BaseEnum):
    scan = "scan"
    discretize = "discretize"
    grad = "grad"
    identity = "identity"
    ss2d = "ss2d"
    delta_m = "delta_m"
    shapes = "shapes"
