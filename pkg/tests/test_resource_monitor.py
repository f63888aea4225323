import time

from src.utils import resource_monitor
from src.utils.resource_monitor import RunTimer, format_bytes, get_process_stats, init_process_cpu_sampler


def test_format_bytes():
    assert format_bytes(None) == "-"
    assert format_bytes(512) == "512 B"
    assert format_bytes(1536) == "1.5 KB"
    assert format_bytes(3 * 1024 ** 3) == "3.0 GB"
    assert format_bytes(5 * 1024 ** 5) == "5120.0 TB"
    assert format_bytes("n/a") == "-"


def test_process_stats_never_raise():
    stats = get_process_stats()
    assert stats.rss_bytes > 0


def test_process_handle_is_shared():
    assert resource_monitor.current_process() is resource_monitor.current_process()


def test_cpu_percent_after_busy_loop():
    init_process_cpu_sampler()
    deadline = time.process_time() + 0.5
    total = 0
    while time.process_time() < deadline:
        total += 1
    stats = get_process_stats()
    assert total > 0
    assert stats.cpu_percent is not None
    assert stats.cpu_percent > 0.0


def test_run_timer_summary():
    timer = RunTimer("spectrum")
    assert timer.elapsed >= 0.0
    assert timer.summary().startswith("spectrum 用时")
