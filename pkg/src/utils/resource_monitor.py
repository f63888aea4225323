"""
资源监控工具（进程内存/CPU、运行耗时）

只写入日志，不进入任何输出文件，保证相同配置下输出逐字节一致。
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import psutil

logger = logging.getLogger(__name__)

_SIZE_UNITS = ("B", "KB", "MB", "GB", "TB")

# cpu_percent(interval=None) 的基准时刻保存在 Process 实例上，采样与读数必须共用同一实例
_process: Optional[psutil.Process] = None


@dataclass
class ProcessStats:
    rss_bytes: int
    cpu_percent: Optional[float]  # 自上次采样以来的进程 CPU%；psutil 读取失败时为 None


@dataclass
class RunTimer:
    """一次命令运行的计时与资源快照"""

    command: str
    started: float = field(default_factory=time.perf_counter)

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.started

    def summary(self) -> str:
        stats = get_process_stats()
        cpu = "-" if stats.cpu_percent is None else f"{stats.cpu_percent:.1f}%"
        return f"{self.command} 用时 {self.elapsed:.2f}s，RSS {format_bytes(stats.rss_bytes)}，CPU {cpu}"


def format_bytes(num_bytes) -> str:
    """字节数转为 1024 进制的可读字符串；无法解析时返回 "-" """
    try:
        size = float(num_bytes)
    except (TypeError, ValueError):
        return "-"
    unit = 0
    while size >= 1024 and unit < len(_SIZE_UNITS) - 1:
        size /= 1024.0
        unit += 1
    return f"{int(size)} B" if unit == 0 else f"{size:.1f} {_SIZE_UNITS[unit]}"


def current_process() -> Optional[psutil.Process]:
    """惰性创建并缓存当前进程句柄"""
    global _process
    if _process is None:
        try:
            _process = psutil.Process()
        except psutil.Error as e:
            logger.warning(f"无法获取进程句柄: {e}")
            return None
    return _process


def init_process_cpu_sampler() -> None:
    """记录 CPU 采样基准；此后 get_process_stats 报告的是这段时间内的 CPU 占用"""
    process = current_process()
    if process is None:
        return
    try:
        process.cpu_percent(interval=None)
    except psutil.Error as e:
        logger.debug(f"CPU 采样初始化失败: {e}")


def get_process_stats() -> ProcessStats:
    process = current_process()
    if process is None:
        return ProcessStats(rss_bytes=0, cpu_percent=None)
    with process.oneshot():
        try:
            rss = int(process.memory_info().rss)
        except psutil.Error:
            rss = 0
        try:
            cpu: Optional[float] = float(process.cpu_percent(interval=None))
        except psutil.Error:
            cpu = None
    return ProcessStats(rss_bytes=rss, cpu_percent=cpu)
