"""
能谱：自由运动与 cot 微扰运动的闭式能量、简并度

无量纲单位（ħ = 1, 2M = 1, R = 1）：
    ε_K + 1 = (K+1)^2 - b^2/(K+1)^2，简并度 (K+1)^2，与 l̃、m̃ 无关
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List

from src.core.polycore import PolyB


@dataclass(frozen=True)
class SpectrumRow:
    """能谱表的一行"""

    K: int
    b_value: float
    epsilon: float
    degeneracy: int


def alpha(K: int) -> PolyB:
    """阻尼参数 α_K = 2b/(K+1)"""
    return PolyB([0, Fraction(2, K + 1)])


def energy_exact(K: int) -> PolyB:
    """ε_K 作为 b 的精确多项式：(K+1)^2 - 1 - b^2/(K+1)^2"""
    if K < 0:
        raise ValueError(f"K 必须非负，得到: {K}")
    return PolyB([(K + 1) ** 2 - 1, 0, Fraction(-1, (K + 1) ** 2)])


def energy(K: int, b_value: float) -> float:
    """ε_K(b)，与 l̃、m̃ 无关"""
    if K < 0:
        raise ValueError(f"K 必须非负，得到: {K}")
    k1 = (K + 1) ** 2
    return k1 - 1 - b_value * b_value / k1


def degeneracy(K: int) -> int:
    """Σ_{l=0..K}(2l+1) = (K+1)^2"""
    return sum(2 * l + 1 for l in range(K + 1))


def energy_gap(b_value: float) -> float:
    """基态与第一激发态之间的能隙 ε_1 - ε_0 = 3 + (3/4)·b^2"""
    return energy(1, b_value) - energy(0, b_value)


def b_grid(start: float, stop: float, step: float) -> List[float]:
    """闭区间 [start, stop] 上的等距网格，按整数步数生成以避免浮点累加误差"""
    if step <= 0:
        raise ValueError(f"步长必须为正，得到: {step}")
    count = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def spectrum_table(k_max: int, b_values: Iterable[float]) -> List[SpectrumRow]:
    """所有 K ≤ k_max 与每个 b 的能谱行，按 K 优先排序"""
    if k_max < 0:
        raise ValueError(f"k_max 必须非负，得到: {k_max}")
    b_list = [float(b) for b in b_values]
    return [
        SpectrumRow(K=K, b_value=b, epsilon=energy(K, b), degeneracy=degeneracy(K))
        for K in range(k_max + 1)
        for b in b_list
    ]
