# -*- coding: utf-8 -*-


# ====================== 错误类型异常，所有业务异常都继承 MyBaseError，命令行统一捕获 ======================
class MyBaseError(Exception):
    pass


class ShapeError(MyBaseError):
    """ 形状不匹配，报错信息里带上双方的形状 """
    pass


class ConfigError(MyBaseError):
    """ 配置错误：未知配置项、偶数卷积核、通道数无法整除、分辨率不能被32整除等 """
    pass


class NumericDomainError(MyBaseError):
    """ 数值越界：Δ 非正、出现 NaN/Inf、Ā 不在 (0,1) """
    pass


class UsageError(MyBaseError):
    """ 接口使用方式错误，例如对非标量调用 backward """
    pass


class OracleError(MyBaseError):
    """ 有限差分校验器本身无法给出结果 """
    pass


class DataError(MyBaseError):
    """ 数据错误：标签越界、有效像素为空、Δm 基线为0、任务集合不一致 """
    pass


class ScheduleError(MyBaseError):
    pass


class OptimizerError(MyBaseError):
    """ 梯度非有限值，带上参数名 """

    def __init__(self, msg, param_name=None):
        MyBaseError.__init__(self, msg)
        self.param_name = param_name


class CheckpointError(MyBaseError):
    """ 权重文件与模型不匹配，offending 为出问题的参数名列表 """

    def __init__(self, msg, offending=None):
        MyBaseError.__init__(self, msg)
        self.offending = list(offending or [])


class TrainingDivergedError(MyBaseError):
    """ 训练出现 NaN，last_good 为保留下来的最后一个正常权重文件 """

    def __init__(self, msg, last_good=None):
        MyBaseError.__init__(self, msg)
        self.last_good = last_good
