"""
folio 日志：进程级单例，所有模块日志器挂在 "folio" 之下。

    get_logger("extract")  ->  folio.extract
    get_logger()           ->  folio

环境变量:
    LOG_LEVEL   默认 INFO
    LOG_DIR     滚动日志目录，默认 ./log（文件名 folio.log）

控制台输出写到 stdout，每行带阶段名（日志器名去掉 "folio." 前缀后的第一段），
消息统一写成 "[Event] | key = value | ..."。
"""

import os
import sys
import time
import asyncio
import logging
import logging.handlers
from contextlib import contextmanager
from pathlib import Path
from functools import wraps

ROOT_NAME = "folio"
_PACKAGE_DIR = Path(__file__).resolve().parent.parent.parent


def _stage_of(logger_name: str) -> str:
    parts = logger_name.split(".")
    return parts[1] if len(parts) > 1 and parts[0] == ROOT_NAME else "-"


class PipelineFormatter(logging.Formatter):
    """补充 stage 与相对路径字段；color=True 时给级别名上色"""
    COLORS = {
        'DEBUG': '\033[36m', 'INFO': '\033[32m', 'WARNING': '\033[33m',
        'ERROR': '\033[31m', 'CRITICAL': '\033[35m',
    }
    RESET = '\033[0m'

    def __init__(self, fmt: str, datefmt: str, color: bool = False):
        super().__init__(fmt, datefmt=datefmt)
        self.color = color

    def format(self, record):
        # 副本，颜色码不能进入文件处理器
        record = logging.makeLogRecord(record.__dict__)
        record.stage = _stage_of(record.name)
        try:
            record.relative_path = str(Path(record.pathname).resolve().relative_to(_PACKAGE_DIR))
        except ValueError:
            record.relative_path = Path(record.pathname).name
        if self.color and record.levelname in self.COLORS:
            record.levelname = f"{self.COLORS[record.levelname]}{record.levelname}{self.RESET}"
        return super().format(record)


class Logger:
    """进程级单例"""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._warned_messages = set()
            cls._instance._setup()
        return cls._instance

    def _setup(self):
        log_dir = Path(os.getenv("LOG_DIR", "./log"))
        log_dir.mkdir(parents=True, exist_ok=True)

        self.logger = logging.getLogger(ROOT_NAME)
        self.set_level(os.getenv("LOG_LEVEL", "INFO"))

        if not self.logger.handlers:
            file_handler = logging.handlers.RotatingFileHandler(
                log_dir / f"{ROOT_NAME}.log", maxBytes=5 * 1024 * 1024, backupCount=3, encoding='utf-8'
            )
            file_handler.setFormatter(PipelineFormatter(
                '%(asctime)s | %(levelname)s | %(stage)s | %(relative_path)s:%(lineno)d | %(message)s',
                datefmt='%Y-%m-%d %H:%M:%S',
            ))
            self.logger.addHandler(file_handler)

            console = logging.StreamHandler(sys.stdout)
            console.setFormatter(PipelineFormatter(
                '%(asctime)s | %(levelname)s | %(stage)s | %(message)s', datefmt='%H:%M:%S', color=True,
            ))
            self.logger.addHandler(console)

        if os.getenv("LOG_DIR", None) is None:
            self.warn_once(f"[Logger] | LOG_DIR env var not set, using {log_dir.absolute()}")

    def set_level(self, level: str) -> None:
        self.logger.setLevel(getattr(logging, str(level).upper(), logging.INFO))

    def get_logger(self, name: str = None):
        if not name:
            return self.logger
        if name == ROOT_NAME or name.startswith(ROOT_NAME + "."):
            return logging.getLogger(name)
        return logging.getLogger(f"{ROOT_NAME}.{name}")

    def warn_once(self, message: str, logger_name: str = None):
        if message not in self._warned_messages:
            self._warned_messages.add(message)
            # stacklevel=3: 跳过 logger.warning / Logger.warn_once / warn_once
            self.get_logger(logger_name).warning(message, stacklevel=3)


_logger = Logger()


def get_logger(name: str = None):
    """name 为阶段或模块名，例如 "extract"、"rag.search"；已带 folio 前缀的名字原样使用"""
    return _logger.get_logger(name)


def warn_once(message: str, logger_name: str = None):
    """同一条警告在进程内只输出一次（例如相对输出目录、缺失的可选配置）"""
    return _logger.warn_once(message, logger_name)


@contextmanager
def stage_timer(stage: str):
    """记录一个流水线阶段的开始、结束与耗时；异常时记录失败并原样抛出"""
    logger = get_logger(stage)
    start = time.perf_counter()
    logger.info(f"[Stage started] | stage = {stage}")
    try:
        yield
    except Exception as e:
        logger.error(f"[Stage failed] | stage = {stage} | seconds = {time.perf_counter() - start:.2f} | "
                     f"{type(e).__name__}: {e}")
        raise
    logger.info(f"[Stage finished] | stage = {stage} | seconds = {time.perf_counter() - start:.2f}")


def log_exception(func):
    """
    记录后原样抛出；日志器取被装饰函数所在模块，
    folio.extract.paths 中的函数记到 folio.extract.paths，行首阶段名为 extract。
    """
    logger = get_logger(func.__module__)

    @wraps(func)
    def sync_wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except Exception as e:
            logger.error(f"[Function failed] | func = {func.__qualname__} | {type(e).__name__}: {e}")
            raise

    @wraps(func)
    async def async_wrapper(*args, **kwargs):
        try:
            return await func(*args, **kwargs)
        except Exception as e:
            logger.error(f"[Coroutine failed] | func = {func.__qualname__} | {type(e).__name__}: {e}")
            raise

    return async_wrapper if asyncio.iscoroutinefunction(func) else sync_wrapper
