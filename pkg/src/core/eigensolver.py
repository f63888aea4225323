"""
独立数值校验：Gauss–Legendre 求积与径向 Rosen–Morse 方程的有限差分本征求解

有限差分矩阵是对称三对角的：
    d_i = 2/h² + V(χ_i)，e_i = -1/h²，V(χ) = -2b·cot χ + l(l+1)/sin²χ
χ_i = i·h，h = π/(n+1)，两端 Dirichlet 边界。
最低若干本征值由 Sturm 序列二分（LAPACK stebz）求出，再用逆迭代与 Rayleigh 商细化。
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded
from scipy.linalg import LinAlgError

from src.core.polycore import trig_eval
from src.core.specfun import GegenbauerConvention, s_function
from src.core.spectrum import energy
from src.exceptions import ConvergenceError, GridTooCoarseWarning

logger = logging.getLogger(__name__)

MIN_GRID_POINTS = 64


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss–Legendre 求积规则；默认区间 [-1, 1]"""

    order: int
    nodes: np.ndarray
    weights: np.ndarray
    interval: Tuple[float, float] = (-1.0, 1.0)

    def mapped(self, a: float, b: float) -> "QuadratureRule":
        """线性映射到 [a, b]"""
        lo, hi = self.interval
        scale = (b - a) / (hi - lo)
        nodes = a + (self.nodes - lo) * scale
        weights = self.weights * scale
        nodes.flags.writeable = False
        weights.flags.writeable = False
        return QuadratureRule(self.order, nodes, weights, (a, b))

    def integrate(self, func: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.sum(self.weights * func(self.nodes)))


def _legendre_with_derivative(n: int, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """三项递推求 P_n(x) 与 P_n'(x)"""
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


@lru_cache(maxsize=32)
def gauss_legendre(order: int, tol: float = 1e-14, max_iter: int = 100) -> QuadratureRule:
    """
    Gauss–Legendre 节点与权重，Newton 迭代，Chebyshev 型初值

    Raises:
        ConvergenceError: Newton 迭代在 max_iter 步内未收敛
    """
    if order < 1:
        raise ValueError(f"求积阶数必须 ≥ 1，得到: {order}")
    i = np.arange(1, order + 1)
    x = np.cos(np.pi * (i - 0.25) / (order + 0.5))
    dx = np.full_like(x, np.inf)
    for _ in range(max_iter):
        p, dp = _legendre_with_derivative(order, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) <= tol:
            break
    else:
        raise ConvergenceError(
            f"Gauss–Legendre 节点在 {max_iter} 步内未收敛",
            details={"order": order, "max_step": float(np.max(np.abs(dx)))},
        )
    _, dp = _legendre_with_derivative(order, x)
    weights = 2.0 / ((1.0 - x * x) * dp * dp)
    idx = np.argsort(x)
    nodes, weights = x[idx], weights[idx]
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return QuadratureRule(order, nodes, weights)


@dataclass(frozen=True)
class Grid1D:
    """(0, π) 上的均匀内点网格"""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"网格内点数必须为正，得到: {self.n}")

    @property
    def h(self) -> float:
        return math.pi / (self.n + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.h * np.arange(1, self.n + 1)

    def refined(self) -> "Grid1D":
        """步长减半的网格（2n+1 个内点）"""
        return Grid1D(2 * self.n + 1)


@dataclass(frozen=True)
class EigenResult:
    """单个 l 通道的最低若干 ε+1"""

    l_channel: int
    b_value: float
    eigenvalues: Tuple[float, ...]
    grid: Grid1D
    richardson: bool
    error_estimate: Optional[float] = None


def rosen_morse_potential(l: int, b_value: float, chi: np.ndarray) -> np.ndarray:
    """V(χ) = -2b·cot χ + l(l+1)/sin²χ"""
    s = np.sin(chi)
    return -2.0 * b_value * np.cos(chi) / s + l * (l + 1) / (s * s)


def fd_matrix(l: int, b_value: float, grid: Grid1D) -> Tuple[np.ndarray, np.ndarray]:
    """三对角矩阵的主对角 d 与次对角 e"""
    h2 = grid.h * grid.h
    d = 2.0 / h2 + rosen_morse_potential(l, b_value, grid.nodes)
    e = np.full(grid.n - 1, -1.0 / h2)
    return d, e


def sturm_count(d: np.ndarray, e: np.ndarray, x: float) -> int:
    """严格小于 x 的本征值个数（LDLᵀ 主元中负数的个数）"""
    diag = d.tolist()
    off = e.tolist()
    tiny = np.finfo(float).tiny
    count = 0
    q = diag[0] - x
    if q < 0:
        count += 1
    for i in range(1, len(diag)):
        if q == 0.0:
            q = tiny
        q = diag[i] - x - off[i - 1] * off[i - 1] / q
        if q < 0:
            count += 1
    return count


def _tridiag_matvec(d: np.ndarray, e: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = d * v
    out[:-1] += e * v[1:]
    out[1:] += e * v[:-1]
    return out


def _inverse_iteration(d: np.ndarray, e: np.ndarray, shift: float, iterations: int = 3) -> float:
    """带位移的逆迭代，返回 Rayleigh 商"""
    n = d.size
    ab = np.zeros((3, n))
    ab[0, 1:] = e
    ab[1] = d - shift
    ab[2, :-1] = e
    v = np.ones(n) / math.sqrt(n)
    for _ in range(iterations):
        v = solve_banded((1, 1), ab, v)
        v /= np.linalg.norm(v)
    return float(v @ _tridiag_matvec(d, e, v))


def _lowest_eigenvalues(l: int, b_value: float, grid: Grid1D, count: int) -> np.ndarray:
    d, e = fd_matrix(l, b_value, grid)
    # 多取一个，用于 Sturm 计数的上界
    vals = eigh_tridiagonal(
        d, e, eigvals_only=True, select="i", select_range=(0, count), lapack_driver="stebz"
    )
    refined = vals[:count].copy()
    for i, lam in enumerate(vals[:count]):
        shift = lam - 1e-9 * max(1.0, abs(lam))
        try:
            rq = _inverse_iteration(d, e, shift)
        except LinAlgError:
            continue
        if abs(rq - lam) <= 1e-6 * max(1.0, abs(lam)):
            refined[i] = rq
    upper = 0.5 * (vals[count - 1] + vals[count])
    found = sturm_count(d, e, upper)
    if found != count:
        raise ConvergenceError(
            f"Sturm 计数 {found} 与请求的本征值个数 {count} 不符",
            details={"l": l, "b": b_value, "n": grid.n},
        )
    return refined


def radial_eigen(
    l_channel: int,
    b_value: float,
    grid: Grid1D,
    count: int = 4,
    richardson: bool = False,
    tolerance: Optional[float] = None,
) -> EigenResult:
    """
    l 通道的最低 count 个 ε+1

    Args:
        richardson: 组合网格 n 与 2n+1：(4·λ_{2n+1} - λ_n)/3
        tolerance: 估计误差超过该值时发出 GridTooCoarseWarning

    Raises:
        ConvergenceError: Sturm 计数不符或本征值不严格递增
    """
    if count < 1:
        raise ValueError(f"count 必须 ≥ 1，得到: {count}")
    if grid.n < MIN_GRID_POINTS:
        raise ValueError(f"网格内点数至少为 {MIN_GRID_POINTS}，得到: {grid.n}")
    if l_channel < 0:
        raise ValueError(f"l 必须非负，得到: {l_channel}")

    coarse = _lowest_eigenvalues(l_channel, b_value, grid, count)
    estimate: Optional[float] = None
    values = coarse
    if richardson:
        fine = _lowest_eigenvalues(l_channel, b_value, grid.refined(), count)
        values = (4.0 * fine - coarse) / 3.0
        estimate = float(np.max(np.abs(fine - coarse))) / 3.0
    elif tolerance is not None:
        half = Grid1D(max(MIN_GRID_POINTS, (grid.n - 1) // 2))
        estimate = float(np.max(np.abs(coarse - _lowest_eigenvalues(l_channel, b_value, half, count)))) / 3.0

    if np.any(np.diff(values) <= 0):
        raise ConvergenceError("本征值不严格递增", details={"values": values.tolist()})
    if tolerance is not None and estimate is not None and estimate > tolerance:
        message = f"网格 n={grid.n} 的估计误差 {estimate:.3e} 超过容差 {tolerance:.3e}"
        logger.warning(message)
        warnings.warn(message, GridTooCoarseWarning, stacklevel=2)
    logger.debug("radial_eigen l=%d b=%g n=%d: %s", l_channel, b_value, grid.n, values.tolist())
    return EigenResult(
        l_channel=l_channel,
        b_value=b_value,
        eigenvalues=tuple(float(v) for v in values),
        grid=grid,
        richardson=richardson,
        error_estimate=estimate,
    )


def closed_form_levels(l_channel: int, b_value: float, count: int) -> List[Tuple[int, float]]:
    """l 通道的前 count 个 (K, ε_K + 1)，K 从 l 开始"""
    return [(K, energy(K, b_value) + 1.0) for K in range(l_channel, l_channel + count)]


@dataclass(frozen=True)
class DegeneracyEntry:
    K: int
    epsilon_by_channel: Dict[int, float]
    closed_form: float

    @property
    def spread(self) -> float:
        values = list(self.epsilon_by_channel.values())
        return max(values) - min(values)

    @property
    def max_deviation(self) -> float:
        return max(abs(v - self.closed_form) for v in self.epsilon_by_channel.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "K": self.K,
            "epsilon_by_channel": {str(l): v for l, v in self.epsilon_by_channel.items()},
            "closed_form": self.closed_form,
            "spread": self.spread,
            "max_deviation": self.max_deviation,
        }


@dataclass(frozen=True)
class DegeneracyReport:
    k_max: int
    b_value: float
    tolerance: float
    entries: Tuple[DegeneracyEntry, ...]

    @property
    def offending(self) -> List[DegeneracyEntry]:
        return [
            e for e in self.entries
            if e.spread > self.tolerance or e.max_deviation > self.tolerance
        ]

    @property
    def passed(self) -> bool:
        return not self.offending

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k_max": self.k_max,
            "b": self.b_value,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "entries": [e.to_dict() for e in self.entries],
            "offending": [e.K for e in self.offending],
        }


def degeneracy_check(
    k_max: int,
    b_value: float,
    tol: float,
    grid_n: int = 4096,
    richardson: bool = True,
) -> DegeneracyReport:
    """每个 K ≤ k_max 从所有通道 l = 0..K 求 ε_K，比较通道间的离散程度与闭式值"""
    if tol <= 0:
        raise ValueError(f"tol 必须为正，得到: {tol}")
    by_level: Dict[int, Dict[int, float]] = {K: {} for K in range(k_max + 1)}
    grid = Grid1D(grid_n)
    for l in range(k_max + 1):
        result = radial_eigen(l, b_value, grid, count=k_max - l + 1, richardson=richardson)
        for i, value in enumerate(result.eigenvalues):
            by_level[l + i][l] = value - 1.0
    entries = tuple(
        DegeneracyEntry(K, by_level[K], energy(K, b_value)) for K in range(k_max + 1)
    )
    report = DegeneracyReport(k_max, b_value, tol, entries)
    for entry in report.offending:
        logger.error("K=%d 简并被破坏: spread=%.3e deviation=%.3e", entry.K, entry.spread, entry.max_deviation)
    return report


@dataclass(frozen=True)
class OrthonormalityReport:
    """
    S_K^l 在权 sin²χ 下的 Gram 矩阵

    max_offdiag 是同一 l、不同 K 之间的最大相对重叠 |G|/sqrt(N·N')，通过与否按它判定；
    max_offdiag_abs 是同样这些项的最大绝对值 |G|；
    same_level 列出同一 K、不同 l 之间的重叠（一般不为零，只报告）。
    """

    k_max: int
    quad_order: int
    norms: Dict[Tuple[int, int], float]
    max_offdiag: float
    max_offdiag_abs: float
    same_level: Dict[Tuple[int, int, int], float]
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_offdiag <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k_max": self.k_max,
            "quad_order": self.quad_order,
            "norms": [{"K": K, "l": l, "norm": v} for (K, l), v in sorted(self.norms.items())],
            "max_offdiag": self.max_offdiag,
            "max_offdiag_abs": self.max_offdiag_abs,
            "same_level": [
                {"K": K, "l": l, "l_prime": lp, "overlap": v} for (K, l, lp), v in sorted(self.same_level.items())
            ],
            "passed": self.passed,
        }


def orthonormality_scan(
    k_max: int,
    quad_order: int = 64,
    convention=GegenbauerConvention.PAPER_RODRIGUES,
    tolerance: float = 1e-12,
) -> OrthonormalityReport:
    if quad_order < 2 * k_max + 4:
        raise ValueError(f"求积阶数至少为 2·k_max+4 = {2 * k_max + 4}，得到: {quad_order}")
    conv = GegenbauerConvention.from_key(convention)
    rule = gauss_legendre(quad_order).mapped(0.0, math.pi)
    weight = np.sin(rule.nodes) ** 2
    values = {
        (K, l): trig_eval(s_function(K, l, conv), 0.0, rule.nodes)
        for K in range(k_max + 1)
        for l in range(K + 1)
    }

    def inner(a, c):
        return float(np.sum(rule.weights * weight * values[a] * values[c]))

    norms = {key: inner(key, key) for key in values}
    max_offdiag = max_offdiag_abs = 0.0
    same_level: Dict[Tuple[int, int, int], float] = {}
    keys = sorted(values)
    for i, (K, l) in enumerate(keys):
        for K2, l2 in keys[i + 1:]:
            if l2 == l and K2 != K:
                overlap = abs(inner((K, l), (K2, l2)))
                max_offdiag_abs = max(max_offdiag_abs, overlap)
                max_offdiag = max(max_offdiag, overlap / math.sqrt(norms[(K, l)] * norms[(K2, l2)]))
            elif K2 == K:
                same_level[(K, l, l2)] = inner((K, l), (K2, l2))
    return OrthonormalityReport(k_max, quad_order, norms, max_offdiag, max_offdiag_abs, same_level, tolerance)


@dataclass(frozen=True)
class ConvergenceFit:
    sizes: Tuple[int, ...]
    errors: Tuple[float, ...]
    slope: float

    def to_dict(self) -> Dict[str, Any]:
        return {"sizes": list(self.sizes), "errors": list(self.errors), "slope": self.slope}


def convergence_order(
    l_channel: int = 0,
    b_value: float = 1.0,
    sizes: Sequence[int] = (256, 512, 1024, 2048),
    level: int = 0,
) -> ConvergenceFit:
    """原始网格（不外推）误差对 h 的双对数斜率"""
    exact = closed_form_levels(l_channel, b_value, level + 1)[level][1]
    errors = []
    steps = []
    for n in sizes:
        grid = Grid1D(n)
        result = radial_eigen(l_channel, b_value, grid, count=level + 1)
        errors.append(abs(result.eigenvalues[level] - exact))
        steps.append(grid.h)
    slope = float(np.polyfit(np.log(steps), np.log(errors), 1)[0])
    logger.info("l=%d b=%g 的收敛阶 %.3f", l_channel, b_value, slope)
    return ConvergenceFit(tuple(sizes), tuple(errors), slope)
