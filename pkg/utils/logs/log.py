# -*- coding: utf-8 -*-
import os
import time
import logging
from logging.handlers import TimedRotatingFileHandler

import portalocker.constants as porta_lock_const
from colorama import Fore, init
from colorlog import ColoredFormatter
from portalocker.utils import Lock as PortaLock

from config import _log_dir, _log_level

init(autoreset=True)

log_colors_config = {
    "DEBUG": "cyan",
    "INFO": "green",
    "WARNING": "yellow",
    "ERROR": "red",
    "CRITICAL": "red",
}


class ConcurrentLogFileLock(PortaLock):
    """ 日志文件锁，锁文件名为 `.__<日志名>.lock`，和日志放在同一目录 """

    def __init__(self, filename, *args, **kwargs):
        PortaLock.__init__(self, self.get_lock_filename(filename), *args, **kwargs)

    @staticmethod
    def get_lock_filename(log_file_name):
        lock_file = log_file_name[:-4] if log_file_name.endswith(".log") else log_file_name
        lock_path, lock_name = os.path.split(lock_file + ".lock")
        return os.path.join(lock_path, ".__" + lock_name)


class ConcurrentTimedRotatingFileHandler(TimedRotatingFileHandler):
    """ 多进程安全的按天切分文件handler，数据生成/评估的worker共用同一个日志文件 """

    def __init__(self, filename, *args, **kwargs):
        file_path = os.path.split(filename)[0]
        if file_path and not os.path.exists(file_path):
            os.makedirs(file_path)
        TimedRotatingFileHandler.__init__(self, filename, *args, **kwargs)
        self.concurrent_lock = ConcurrentLogFileLock(filename, flags=porta_lock_const.LOCK_EX)

    def emit(self, record) -> None:
        # 拿到进程锁再判断是否切分，保证只有一个进程执行切分
        with self.concurrent_lock:
            try:
                if self.shouldRollover(record):
                    dfn = self.rotation_filename(self.baseFilename + "." + self.suffix_for(self.rolloverAt))
                    if os.path.exists(dfn):  # 别的进程已经切分过了，只需要重新打开文件
                        if self.stream:
                            self.stream.close()
                        self.stream = self._open()
                        self.rolloverAt = self.computeRollover(int(record.created))
                    else:
                        self.doRollover()
                logging.FileHandler.emit(self, record)
            except Exception:
                self.handleError(record)

    def suffix_for(self, rollover_at):
        return time.strftime(self.suffix, time.localtime(rollover_at - self.interval))


class GetLogger:
    """ 自定义logging，控制台彩色输出，配置了日志目录时再写文件 """

    def __init__(self, logs_dir=None, logs_level=logging.INFO):
        self.logs_dir = logs_dir
        self.log_name = "mtmamba.log"
        self.logs_level = logs_level
        self.console_formatter = ColoredFormatter(
            "%(log_color)s%(asctime)s [%(levelname)-8s]%(reset)s [%(module)s:%(lineno)d] %(message)s",
            reset=True,
            log_colors=log_colors_config
        )
        self.file_formatter = logging.Formatter(
            "%(asctime)s [%(process)d] [%(filename)s] [%(funcName)s] [%(lineno)d] [%(levelname)s] %(message)s"
        )

    def get_logger(self):
        """ 在logger中添加日志句柄并返回，如果logger已有句柄，则直接返回 """
        log_logger = logging.getLogger("mtmamba")
        log_logger.setLevel(self.logs_level)
        log_logger.propagate = False
        if not log_logger.handlers:  # 避免重复日志
            console_handler = logging.StreamHandler()
            console_handler.setLevel(self.logs_level)
            console_handler.setFormatter(self.console_formatter)
            log_logger.addHandler(console_handler)

            if self.logs_dir:
                file_handler = ConcurrentTimedRotatingFileHandler(
                    filename=os.path.join(self.logs_dir, self.log_name),
                    when="MIDNIGHT",
                    interval=1,
                    backupCount=30,
                    encoding="UTF-8",
                    delay=False,
                    utc=False
                )
                file_handler.suffix = "%Y-%m-%d.log"
                file_handler.setLevel(logging.DEBUG)
                file_handler.setFormatter(self.file_formatter)
                log_logger.addHandler(file_handler)

        return log_logger


logger = GetLogger(_log_dir, getattr(logging, _log_level, logging.INFO)).get_logger()


def coloring(text, color="WHITE"):
    """ 命令行结果着色，如 PASS 绿色 / FAIL 红色 """
    return getattr(Fore, color.upper()) + text
