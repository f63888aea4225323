"""
pytest 公共设置：把项目根目录加入 sys.path，提供常用 fixture
"""

import os
import sys

import numpy as np
import pytest

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "golden")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def golden_path():
    def _path(name: str) -> str:
        return os.path.join(GOLDEN_DIR, name)
    return _path


@pytest.fixture
def config_dir(tmp_path):
    """每个测试独立的 settings.ini 目录（首次读取时写入默认配置）"""
    d = tmp_path / "config"
    d.mkdir()
    return d
