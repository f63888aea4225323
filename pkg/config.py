"""
配置文件管理
"""

import configparser
from dataclasses import dataclass
from pathlib import Path
from typing import Any, List, Mapping, Optional, Tuple

from src.core.specfun import GegenbauerConvention
from src.core.spectrum import b_grid
from src.exceptions import ConfigError

OUTPUT_FORMATS = ("csv", "json")
COMMANDS = ("spectrum", "table1", "verify", "sample", "eigensolve", "matrix")
SINGLE_B_COMMANDS = ("sample", "eigensolve", "matrix")


class ConfigManager:
    """配置管理器"""

    def __init__(self, app_dir: str, config_dir: Optional[str] = None):
        self.app_dir = Path(app_dir)
        self.config_dir = Path(config_dir) if config_dir else self.app_dir / "config"
        self.config_file = self.config_dir / "settings.ini"
        self.config_dir.mkdir(exist_ok=True, parents=True)

        # 默认配置
        self.default_config = {
            'general': {
                'log_level': 'INFO',
                'log_file': 'logs/curved_coulomb.log',
                # 随机采样点（verify）的唯一随机源
                'seed': '20240517',
                # paper: G_n = (-1)^n n! C_n；standard: 常规 Gegenbauer
                'convention': 'paper',
                'output_format': 'csv',
            },
            'spectrum': {
                'kmax': '3',
                'b_start': '0.0',
                'b_stop': '4.0',
                'b_step': '0.1',
            },
            'expansion': {
                'kmax': '3',
                'b': '2.0',
                'regularize_poles': 'false',
            },
            'verify': {
                'kmax': '3',
                # 逗号分隔
                'b_values': '0.45,1.0,2.0',
                'sample_points': '50',
            },
            'eigensolver': {
                'l': '0',
                'b': '1.0',
                'n': '4096',
                'count': '4',
                'richardson': 'true',
                'tolerance': '1e-4',
                'quad_order': '64',
            },
            'sample': {
                'b': '2.0',
                'theta': '1.5707963267948966',
                'phi': '0.0',
                'chi_points': '61',
                'phi_points': '61',
            },
        }

        self.config = configparser.ConfigParser()
        self.load_config()

    def load_config(self) -> None:
        """加载配置文件"""
        if self.config_file.exists():
            self.config.read(self.config_file, encoding='utf-8')
        else:
            # 使用默认配置
            for section, options in self.default_config.items():
                self.config[section] = options
            self.save_config()

    def save_config(self) -> None:
        """保存配置文件"""
        with open(self.config_file, 'w', encoding='utf-8') as f:
            self.config.write(f)

    def get(self, section: str, key: str, default: Optional[str] = None) -> str:
        """获取配置值"""
        try:
            return self.config.get(section, key)
        except (configparser.NoSectionError, configparser.NoOptionError):
            if default is not None:
                return default
            # 从默认配置中获取
            return self.default_config.get(section, {}).get(key, '')

    def set(self, section: str, key: str, value: str) -> None:
        """设置配置值"""
        if section not in self.config:
            self.config[section] = {}
        self.config[section][key] = value
        self.save_config()

    def get_bool(self, section: str, key: str, default: bool = False) -> bool:
        """获取布尔值配置"""
        value = self.get(section, key, str(default)).lower()
        return value in ('true', 'yes', '1', 'on')

    def get_int(self, section: str, key: str, default: int = 0) -> int:
        """获取整数值配置"""
        try:
            return int(self.get(section, key, str(default)))
        except ValueError:
            return default

    def get_float(self, section: str, key: str, default: float = 0.0) -> float:
        """获取浮点数值配置"""
        try:
            return float(self.get(section, key, str(default)))
        except ValueError:
            return default

    def get_list(self, section: str, key: str) -> List[str]:
        """逗号分隔的列表，忽略空项"""
        return [item.strip() for item in self.get(section, key).split(',') if item.strip()]

    def get_float_list(self, section: str, key: str) -> List[float]:
        try:
            return [float(v) for v in self.get_list(section, key)]
        except ValueError as e:
            raise ConfigError(f"[{section}] {key} 不是数值列表: {e}", details={"section": section, "key": key}) from e


@dataclass(frozen=True)
class RunConfig:
    """一次命令运行的完整参数；相同 (config, seed) 的输出逐字节一致"""

    command: str
    kmax: int
    b_values: Tuple[float, ...]
    convention: GegenbauerConvention
    grid_size: int
    quad_order: int
    output_format: str
    output_path: Optional[str]
    seed: int
    sample_points: int = 50
    l_channel: int = 0
    count: int = 4
    richardson: bool = True
    tolerance: float = 1e-4
    quantum: Tuple[int, int, int] = (1, 1, 1)
    damped: bool = False
    theta: float = 1.5707963267948966
    phi: float = 0.0
    chi_points: int = 61
    phi_points: int = 61
    regularize_poles: bool = False

    @property
    def b_value(self) -> float:
        """单值命令（sample / eigensolve / matrix）使用的 b"""
        return self.b_values[0]

    @classmethod
    def from_sources(cls, command: str, cli: Mapping[str, Any], config: ConfigManager) -> "RunConfig":
        """
        合并命令行参数与配置文件；命令行中为 None 的项回退到 settings.ini，再回退到内置默认值

        Raises:
            ConfigError: 命令、约定或输出格式不合法，或单值命令给了多个 b
        """
        if command not in COMMANDS:
            raise ConfigError(f"未知命令: {command}", details={"command": command})

        def pick(key: str, fallback):
            value = cli.get(key)
            return fallback if value is None else value

        try:
            convention = GegenbauerConvention.from_key(pick('convention', config.get('general', 'convention')))
        except ValueError as e:
            raise ConfigError(str(e)) from e
        output_format = str(pick('format', config.get('general', 'output_format'))).lower()
        if output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"未知输出格式: {output_format}（可选: csv / json）")

        section = {
            'spectrum': 'spectrum',
            'table1': 'expansion',
            'matrix': 'expansion',
            'verify': 'verify',
            'sample': 'expansion',
            'eigensolve': 'expansion',
        }[command]
        kmax = int(pick('kmax', config.get_int(section, 'kmax', 3)))
        if kmax < 0:
            raise ConfigError(f"kmax 必须非负，得到: {kmax}")

        b_cli = cli.get('b')
        if b_cli and len(b_cli) > 1 and command in SINGLE_B_COMMANDS:
            raise ConfigError(
                f"{command} 只接受一个 b 值，得到 {len(b_cli)} 个",
                details={"command": command, "b": list(b_cli)},
            )
        if b_cli:
            b_values = tuple(float(b) for b in b_cli)
        elif command == 'spectrum':
            b_values = tuple(b_grid(
                config.get_float('spectrum', 'b_start', 0.0),
                config.get_float('spectrum', 'b_stop', 4.0),
                config.get_float('spectrum', 'b_step', 0.1),
            ))
        elif command == 'verify':
            b_values = tuple(config.get_float_list('verify', 'b_values'))
        elif command == 'eigensolve':
            b_values = (config.get_float('eigensolver', 'b', 1.0),)
        elif command == 'matrix':
            b_values = (config.get_float('expansion', 'b', 2.0),)
        else:
            b_values = (config.get_float('sample', 'b', 2.0),)
        if not b_values:
            raise ConfigError("至少需要一个 b 值")

        quantum = cli.get('q')
        return cls(
            command=command,
            kmax=kmax,
            b_values=b_values,
            convention=convention,
            grid_size=int(pick('n', config.get_int('eigensolver', 'n', 4096))),
            quad_order=int(pick('quad_order', config.get_int('eigensolver', 'quad_order', 64))),
            output_format=output_format,
            output_path=cli.get('out'),
            seed=int(pick('seed', config.get_int('general', 'seed', 0))),
            sample_points=int(pick('sample_points', config.get_int('verify', 'sample_points', 50))),
            l_channel=int(pick('l', config.get_int('eigensolver', 'l', 0))),
            count=int(pick('count', config.get_int('eigensolver', 'count', 4))),
            richardson=bool(pick('richardson', config.get_bool('eigensolver', 'richardson', True))),
            tolerance=float(pick('tolerance', config.get_float('eigensolver', 'tolerance', 1e-4))),
            quantum=tuple(int(v) for v in quantum) if quantum else (1, 1, 1),
            damped=bool(pick('damped', False)),
            theta=float(pick('theta', config.get_float('sample', 'theta', 1.5707963267948966))),
            phi=float(pick('phi', config.get_float('sample', 'phi', 0.0))),
            chi_points=int(pick('chi_points', config.get_int('sample', 'chi_points', 61))),
            phi_points=int(pick('phi_points', config.get_int('sample', 'phi_points', 61))),
            regularize_poles=bool(pick('regularize_poles', config.get_bool('expansion', 'regularize_poles', False))),
        )


# 全局配置实例
_config_instance: Optional[ConfigManager] = None


def init_config(app_dir: str, config_dir: Optional[str] = None) -> ConfigManager:
    """初始化全局配置"""
    global _config_instance
    _config_instance = ConfigManager(app_dir, config_dir)
    return _config_instance


def get_config() -> ConfigManager:
    """获取全局配置实例"""
    if _config_instance is None:
        raise RuntimeError("配置未初始化，请先调用 init_config()")
    return _config_instance
