#!/usr/bin/env python3
"""
曲面库仑问题工具 - 主程序入口
复现分解表、能谱与图像数据，运行恒等式校验与数值本征求解
"""

import sys
import logging
import argparse
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np


def get_app_root() -> Path:
    """
    Writable directory for logs/config.
    - dev: directory of this file
    - frozen: directory of the executable
    """
    if getattr(sys, "frozen", False):
        return Path(sys.executable).parent
    return Path(__file__).parent


app_root = get_app_root()

# 添加项目根目录到Python路径
sys.path.insert(0, str(app_root))

from config import COMMANDS, OUTPUT_FORMATS, ConfigManager, RunConfig, init_config  # noqa: E402
from src.core.eigensolver import Grid1D, closed_form_levels, radial_eigen  # noqa: E402
from src.core.expansion import PAPER, connection_matrix, table1, table1_diff  # noqa: E402
from src.core.specfun import QuantumNumbers, harmonic_norm, hyper_harmonic  # noqa: E402
from src.core.spectrum import spectrum_table  # noqa: E402
from src.core.verify import run_verification  # noqa: E402
from src.exceptions import CurvedCoulombError  # noqa: E402
from src.utils import artifacts  # noqa: E402
from src.utils.resource_monitor import RunTimer, init_process_cpu_sampler  # noqa: E402

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_ERROR = 2


@dataclass
class CommandOutput:
    text: str
    exit_code: int = EXIT_OK


def cmd_spectrum(config: RunConfig) -> CommandOutput:
    rows = spectrum_table(config.kmax, config.b_values)
    logger.info("能谱表: K ≤ %d，%d 个 b 值，共 %d 行", config.kmax, len(config.b_values), len(rows))
    return CommandOutput(artifacts.spectrum_artifact(rows, config.output_format))


def cmd_table1(config: RunConfig) -> CommandOutput:
    rows = table1(config.kmax, config.convention)
    diffs = table1_diff(rows)
    diffs = [d for d in diffs if d["K"] <= config.kmax]
    exit_code = EXIT_OK
    if diffs:
        level = logging.ERROR if config.convention is PAPER else logging.INFO
        logger.log(level, "约定 %s 与已发表分解表有 %d 处差异", config.convention.value, len(diffs))
        for d in diffs:
            logger.log(level, "  (K=%s, l̃=%s, l=%s): 已发表 %s，计算 %s",
                       d["K"], d["l_tilde"], d["l"], d["expected"], d["computed"])
        if config.convention is PAPER:
            exit_code = EXIT_VERIFICATION_FAILED
    # 分解表只有 JSON 才是完整的机器可读形式，CSV 为扁平化视图
    return CommandOutput(artifacts.table1_artifact(rows, config.output_format), exit_code)


def cmd_verify(config: RunConfig) -> CommandOutput:
    report = run_verification(
        config.kmax,
        config.b_values,
        point_count=config.sample_points,
        seed=config.seed,
        convention=config.convention,
    )
    for r in report.discrepancies:
        logger.warning("递推常数 (K=%d, l=%d): 计算 %s，已发表 %s", r.K, r.l, r.constant, r.published)
    exit_code = EXIT_OK if report.passed else EXIT_VERIFICATION_FAILED
    return CommandOutput(artifacts.verify_artifact(report.to_dict()), exit_code)


def cmd_sample(config: RunConfig) -> CommandOutput:
    q = QuantumNumbers(*config.quantum)
    chi = np.linspace(0.0, math.pi, config.chi_points)
    phi = np.linspace(0.0, 2.0 * math.pi, config.phi_points)
    chi_grid, phi_grid = np.meshgrid(chi, phi, indexing="ij")
    values = hyper_harmonic(q, config.damped, chi_grid, config.theta, phi_grid,
                            config.b_value, config.convention)
    norm = harmonic_norm(q.K, q.l, config.convention, config.quad_order)
    extra = {
        "K": q.K, "l": q.l, "m": q.m,
        "damped": config.damped,
        "b": config.b_value,
        "theta": config.theta,
        "convention": config.convention.value,
    }
    return CommandOutput(artifacts.sample_artifact(chi, phi, values, norm, config.output_format, extra))


def cmd_eigensolve(config: RunConfig) -> CommandOutput:
    result = radial_eigen(
        config.l_channel,
        config.b_value,
        Grid1D(config.grid_size),
        count=config.count,
        richardson=config.richardson,
        tolerance=config.tolerance,
    )
    closed = closed_form_levels(config.l_channel, config.b_value, config.count)
    return CommandOutput(artifacts.eigen_artifact(result, closed, config.output_format))


def cmd_matrix(config: RunConfig) -> CommandOutput:
    matrix = connection_matrix(config.kmax, convention=config.convention)
    values = matrix.evaluate(config.theta, config.phi, config.b_value, config.regularize_poles)
    det = complex(np.prod(np.diag(values)))
    extra = {
        "K": config.kmax,
        "theta": config.theta,
        "phi": config.phi,
        "b": config.b_value,
        "determinant": [det.real, det.imag],
        "convention": config.convention.value,
    }
    return CommandOutput(artifacts.matrix_artifact(values, config.output_format, extra))


COMMAND_HANDLERS = {
    "spectrum": cmd_spectrum,
    "table1": cmd_table1,
    "verify": cmd_verify,
    "sample": cmd_sample,
    "eigensolve": cmd_eigensolve,
    "matrix": cmd_matrix,
}


def build_parser() -> argparse.ArgumentParser:
    """命令行解析器；各子命令共享同一组参数，未给出的参数为 None，回退到 settings.ini"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kmax", type=int, help="最大 K（matrix 命令中为矩阵的 K）")
    common.add_argument("--b", type=float, action="append", help="微扰强度 b，可重复")
    common.add_argument("--convention", help="Gegenbauer 约定: standard / paper")
    common.add_argument("--n", type=int, help="有限差分网格内点数")
    common.add_argument("--quad-order", dest="quad_order", type=int, help="Gauss–Legendre 阶数")
    common.add_argument("--format", choices=OUTPUT_FORMATS, help="输出格式")
    common.add_argument("--out", help="输出文件，缺省为标准输出")
    common.add_argument("--seed", type=int, help="随机采样点种子")
    common.add_argument("--sample-points", dest="sample_points", type=int, help="verify 的随机采样点数")
    common.add_argument("--regularize-poles", dest="regularize_poles", action="store_true", default=None,
                        help="θ 极点处按 P_l^0(±1) 正则化 A_K")
    common.add_argument("--q", nargs=3, type=int, metavar=("K", "L", "M"), help="sample 的量子数")
    common.add_argument("--damped", action="store_true", default=None, help="sample 使用阻尼超球谐函数")
    common.add_argument("--theta", type=float)
    common.add_argument("--phi", type=float)
    common.add_argument("--l", type=int, help="eigensolve 的角动量通道")
    common.add_argument("--count", type=int, help="eigensolve 求的本征值个数")
    common.add_argument("--richardson", dest="richardson", action="store_true", default=None)
    common.add_argument("--no-richardson", dest="richardson", action="store_false", default=None)
    common.add_argument("--tolerance", type=float, help="网格误差容差")
    common.add_argument("--chi-points", dest="chi_points", type=int)
    common.add_argument("--phi-points", dest="phi_points", type=int)
    common.add_argument("--config-dir", dest="config_dir", help="settings.ini 所在目录")
    common.add_argument("--log-level", dest="log_level", help="DEBUG / INFO / WARNING / ERROR")

    parser = argparse.ArgumentParser(prog="curved-coulomb", description="S³ 上的 cot 势（曲面库仑问题）工具")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


class CurvedCoulombApp:
    """曲面库仑工具主类"""

    def __init__(self, argv: Optional[List[str]] = None):
        self.args = build_parser().parse_args(argv)
        self.config_manager: ConfigManager = init_config(str(app_root), self.args.config_dir)
        self.setup_logging()

    def setup_logging(self):
        """设置日志系统"""
        level_name = (self.args.log_level or self.config_manager.get("general", "log_level") or "INFO").upper()
        level = getattr(logging, level_name, logging.INFO)

        log_file = Path(self.config_manager.get("general", "log_file"))
        if not log_file.is_absolute():
            log_file = self.config_manager.config_dir.parent / log_file
        log_file.parent.mkdir(exist_ok=True, parents=True)

        logging.basicConfig(
            level=level,
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            handlers=[
                logging.FileHandler(log_file, encoding='utf-8'),
                logging.StreamHandler()
            ],
            force=True,
        )

        self.logger = logging.getLogger(__name__)
        self.logger.info("=" * 50)
        self.logger.info("曲面库仑工具启动: %s", self.args.command)
        self.logger.info(f"配置文件: {self.config_manager.config_file}")

    def run(self) -> int:
        """执行子命令，返回退出码"""
        init_process_cpu_sampler()
        timer = RunTimer(self.args.command)
        try:
            config = RunConfig.from_sources(self.args.command, vars(self.args), self.config_manager)
            output = COMMAND_HANDLERS[config.command](config)
            artifacts.write_artifact(output.text, config.output_path)
            return output.exit_code
        except (CurvedCoulombError, ValueError) as e:
            self.logger.error(f"运行错误: {e}")
            if getattr(e, "details", None):
                self.logger.error(f"错误详情: {e.details}")
            return EXIT_ERROR
        finally:
            self.logger.info(timer.summary())
            self.logger.info("=" * 50)


def main(argv: Optional[List[str]] = None) -> int:
    """主函数"""
    app = CurvedCoulombApp(argv)
    return app.run()


if __name__ == "__main__":
    sys.exit(main())
