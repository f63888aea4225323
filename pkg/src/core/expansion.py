"""
微扰本征函数在自由超球谐基中的精确分解，以及连接矩阵 A_K(θ, φ)

ψ_K^l̃(χ) = Σ_{l=l̃..K} C_l·S_K^l(χ)，C_l ∈ Q[b]
系数由规范三角单项式上的精确线性方程组求得（同一 K 下不同 l 的 S_K^l
在 χ 测度下并不两两正交，所以不用内积投影）。
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, solve, solve_triangular

from src.core.polycore import POLE_TOLERANCE, DampedTrigExpr, PolyB, TrigExpr, poly_eval, trig_eval
from src.core.specfun import (
    GegenbauerConvention,
    QuantumNumbers,
    assoc_legendre,
    hyper_harmonic,
    psi_chi,
    s_function,
    sph_harmonic,
)
from src.exceptions import PoleError, QuantumNumberError, SingularSystemError

logger = logging.getLogger(__name__)

PAPER = GegenbauerConvention.PAPER_RODRIGUES


def _published(*coeffs) -> PolyB:
    return PolyB(Fraction(c) for c in coeffs)


# 已发表的分解表（K ≤ 3，共十行），键为 (K, l̃)，值为 {l: C_l}
PUBLISHED_TABLE1: Dict[Tuple[int, int], Dict[int, PolyB]] = {
    (0, 0): {0: _published(1)},
    (1, 0): {0: _published(1), 1: _published(0, 1)},
    (1, 1): {1: _published(1)},
    (2, 0): {0: _published(1), 1: _published(0, 1), 2: _published(0, 0, "4/9")},
    (2, 1): {1: _published(1), 2: _published(0, "2/3")},
    (2, 2): {2: _published(1)},
    (3, 0): {
        0: _published(1),
        1: _published(0, "9/10"),
        2: _published(0, 0, "1/2"),
        3: _published(0, "-2/5", 0, "1/8"),
    },
    (3, 1): {1: _published(1), 2: _published(0, "5/6"), 3: _published(0, 0, "1/4")},
    (3, 2): {2: _published(1), 3: _published(0, "1/2")},
    (3, 3): {3: _published(1)},
}


@dataclass(frozen=True)
class ExpansionRow:
    """分解表的一行：ψ_K^l̃ 在 S_K^l（l = l̃..K）上的系数"""

    K: int
    l_tilde: int
    coeffs: Mapping[int, PolyB]
    convention: GegenbauerConvention

    def __post_init__(self):
        object.__setattr__(self, "coeffs", MappingProxyType(dict(sorted(self.coeffs.items()))))

    def coefficient(self, l: int) -> PolyB:
        return self.coeffs.get(l, PolyB())

    def reconstruct(self) -> TrigExpr:
        total = TrigExpr.zero()
        for l, c in self.coeffs.items():
            total = total + s_function(self.K, l, self.convention).scale(c)
        return total

    def to_json(self) -> Dict[str, Any]:
        return {
            "K": self.K,
            "l_tilde": self.l_tilde,
            "convention": self.convention.value,
            "coeffs": [{"l": l, "poly": c.to_json()} for l, c in self.coeffs.items()],
        }


def _solve_exact(matrix: List[List[Fraction]], rhs: List[PolyB]) -> List[PolyB]:
    """有理系数矩阵、Q[b] 右端项的 Gauss–Jordan 消元；超定方程组要求相容"""
    a = [list(r) for r in matrix]
    y = list(rhs)
    n_rows = len(a)
    n_cols = len(a[0]) if a else 0
    pivot_row = 0
    for col in range(n_cols):
        pr = next((r for r in range(pivot_row, n_rows) if a[r][col] != 0), None)
        if pr is None:
            raise SingularSystemError(
                "S_K^l 基函数线性相关，方程组奇异",
                details={"column": col},
            )
        a[pivot_row], a[pr] = a[pr], a[pivot_row]
        y[pivot_row], y[pr] = y[pr], y[pivot_row]
        piv = a[pivot_row][col]
        a[pivot_row] = [v / piv for v in a[pivot_row]]
        y[pivot_row] = y[pivot_row] / piv
        for r in range(n_rows):
            if r != pivot_row and a[r][col] != 0:
                factor = a[r][col]
                a[r] = [v - factor * w for v, w in zip(a[r], a[pivot_row])]
                y[r] = y[r] - y[pivot_row] * factor
        pivot_row += 1
    for r in range(pivot_row, n_rows):
        if not y[r].is_zero():
            raise SingularSystemError("方程组不相容：ψ 不在 S_K^l 张成的空间内", details={"row": r})
    return y[:n_cols]


def expand(K: int, l_tilde: int, convention=PAPER) -> ExpansionRow:
    """
    求 ψ_K^l̃ = Σ C_l·S_K^l 的精确系数

    Raises:
        SingularSystemError: 基函数线性相关或方程组不相容（理论上不会发生）
    """
    conv = GegenbauerConvention.from_key(convention)
    target = psi_chi(K, l_tilde)
    ells = list(range(l_tilde, K + 1))
    basis = [s_function(K, l, conv) for l in ells]
    keys = set(target.terms)
    for s in basis:
        keys.update(s.terms)
    ordered = sorted(keys, key=lambda k: (k[1], k[0]))
    matrix = [[s.coefficient(*key).constant_term() for s in basis] for key in ordered]
    rhs = [target.coefficient(*key) for key in ordered]
    solution = _solve_exact(matrix, rhs)
    row = ExpansionRow(K, l_tilde, dict(zip(ells, solution)), conv)
    if row.reconstruct() != target:
        raise SingularSystemError("重构校验失败", details={"K": K, "l_tilde": l_tilde})
    logger.debug("expand K=%d l̃=%d (%s): %s", K, l_tilde, conv.value,
                 {l: str(c) for l, c in row.coeffs.items()})
    return row


def table1(k_max: int, convention=PAPER) -> List[ExpansionRow]:
    """K ≤ k_max 的全部分解行，按 (K, l̃) 排序"""
    if k_max < 0:
        raise ValueError(f"k_max 必须非负，得到: {k_max}")
    return [expand(K, lt, convention) for K in range(k_max + 1) for lt in range(K + 1)]


def table1_diff(rows: Iterable[ExpansionRow]) -> List[Dict[str, Any]]:
    """
    与已发表分解表逐项比对

    Returns:
        差异列表，每项含 K、l_tilde、l、expected、computed；空列表表示完全一致
    """
    diffs: List[Dict[str, Any]] = []
    seen = set()
    for row in rows:
        key = (row.K, row.l_tilde)
        published = PUBLISHED_TABLE1.get(key)
        if published is None:
            continue
        seen.add(key)
        for l in sorted(set(published) | set(row.coeffs)):
            expected = published.get(l, PolyB())
            computed = row.coefficient(l)
            if expected != computed:
                diffs.append({
                    "K": row.K,
                    "l_tilde": row.l_tilde,
                    "l": l,
                    "expected": str(expected),
                    "computed": str(computed),
                })
    for key in sorted(set(PUBLISHED_TABLE1) - seen):
        diffs.append({"K": key[0], "l_tilde": key[1], "l": None, "expected": "row", "computed": "missing"})
    return diffs


def find_reproducing_convention() -> Optional[GegenbauerConvention]:
    """返回能逐项复现已发表分解表的约定；都不能时返回 None"""
    for conv in GegenbauerConvention:
        diffs = table1_diff(table1(3, conv))
        if not diffs:
            return conv
        logger.info("约定 %s 与已发表分解表有 %d 处差异", conv.value, len(diffs))
    return None



def expand_by_quadrature(
    K: int, l_tilde: int, b_value: float, convention=PAPER, order: int = 64
) -> Dict[int, float]:
    """
    在给定 b 处用数值求积重新求分解系数，与精确解独立

    同一 K 下的 S_K^l 在 sin²χ 权下不正交，因此先求 Gram 矩阵
    G_{ll'} = ∫ S_K^l·S_K^{l'}·sin²χ dχ 与投影 p_l = ∫ ψ·S_K^l·sin²χ dχ，再解 G·c = p。
    """
    # 延迟导入，避免与 eigensolver 循环依赖
    from src.core.eigensolver import gauss_legendre

    conv = GegenbauerConvention.from_key(convention)
    if not 0 <= l_tilde <= K:
        raise QuantumNumberError(f"要求 0 ≤ l̃ ≤ K，得到 K={K}, l̃={l_tilde}", details={"K": K, "l_tilde": l_tilde})
    rule = gauss_legendre(order).mapped(0.0, math.pi)
    weights = rule.weights * np.sin(rule.nodes) ** 2
    ells = list(range(l_tilde, K + 1))
    basis = np.array([trig_eval(s_function(K, l, conv), 0.0, rule.nodes) for l in ells])
    target = np.asarray(trig_eval(psi_chi(K, l_tilde), b_value, rule.nodes))
    gram = basis @ (weights[:, None] * basis.T)
    projections = basis @ (weights * target)
    try:
        coeffs = solve(gram, projections, assume_a="pos")
    except LinAlgError as e:
        raise SingularSystemError("求积 Gram 矩阵奇异", details={"K": K, "l_tilde": l_tilde}) from e
    return dict(zip(ells, (float(c) for c in coeffs)))


@dataclass(frozen=True)
class QuadratureCheck:
    """精确分解系数与求积系数的对照"""

    K: int
    l_tilde: int
    b_value: float
    max_deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "K": self.K,
            "l_tilde": self.l_tilde,
            "b": self.b_value,
            "max_deviation": self.max_deviation,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def check_expansion_quadrature(
    K: int, l_tilde: int, b_value: float, convention=PAPER, order: int = 64, tolerance: float = 1e-10
) -> QuadratureCheck:
    """expand 的系数在 b 处取值后与 expand_by_quadrature 比较，偏差按 max(1, |C_l|) 相对化"""
    row = expand(K, l_tilde, convention)
    numeric = expand_by_quadrature(K, l_tilde, b_value, convention, order)
    worst = 0.0
    for l, value in numeric.items():
        exact = poly_eval(row.coefficient(l), b_value)
        worst = max(worst, abs(value - exact) / max(1.0, abs(exact)))
    logger.debug("求积对照 K=%d l̃=%d b=%g: 最大偏差 %.3e", K, l_tilde, b_value, worst)
    return QuadratureCheck(K=K, l_tilde=l_tilde, b_value=b_value, max_deviation=worst, tolerance=tolerance)

@dataclass(frozen=True)
class MatrixEntry:
    """A_K 的非零元：coeff·e^{i·phase·φ}·P_{num_l}^{num_m}(cos θ) / P_{den_l}^{den_l}(cos θ)"""

    coeff: PolyB
    phase: int
    num_l: int
    num_m: int
    den_l: int


def _legendre_factor(l: int, m: int, cos_theta: float, pole: Optional[str]) -> float:
    # 极点处把 P_l^l(cos θ) 换成 P_l^0(±1) = (±1)^l
    if pole is not None and m == l:
        return 1.0 if pole == "north" else float((-1) ** l)
    return float(assoc_legendre(l, m, cos_theta))


@dataclass(frozen=True)
class ConnectionMatrix:
    """上三角连接矩阵 A_K(θ, φ)，m_tilde[r] 为第 r 行的 m̃_r"""

    K: int
    m_tilde: Tuple[int, ...]
    entries: Tuple[Tuple[Optional[MatrixEntry], ...], ...]
    convention: GegenbauerConvention

    @property
    def size(self) -> int:
        return self.K + 1

    def is_upper_triangular(self) -> bool:
        return all(self.entries[r][c] is None for r in range(self.size) for c in range(r))

    def evaluate(self, theta: float, phi: float, b_value: float, regularize_poles: bool = False) -> np.ndarray:
        """
        在 (θ, φ, b) 处求出复数矩阵

        Raises:
            PoleError: θ ∈ {0, π} 且未开启极点正则化
        """
        pole: Optional[str] = None
        if abs(math.sin(theta)) < POLE_TOLERANCE:
            if not regularize_poles:
                raise PoleError("A_K 在 θ ∈ {0, π} 奇异", details={"theta": theta, "K": self.K})
            pole = "north" if math.cos(theta) > 0 else "south"
        x = math.cos(theta)
        out = np.zeros((self.size, self.size), dtype=complex)
        for r, row in enumerate(self.entries):
            for c, entry in enumerate(row):
                if entry is None:
                    continue
                ratio = _legendre_factor(entry.num_l, entry.num_m, x, pole) / _legendre_factor(
                    entry.den_l, entry.den_l, x, pole
                )
                out[r, c] = poly_eval(entry.coeff, b_value) * np.exp(1j * entry.phase * phi) * ratio
        return out

    def determinant(self, theta: float, phi: float, b_value: float, regularize_poles: bool = False) -> complex:
        """上三角矩阵的行列式 = 对角元之积"""
        a = self.evaluate(theta, phi, b_value, regularize_poles)
        return complex(np.prod(np.diag(a)))

    def inverse(self, theta: float, phi: float, b_value: float, regularize_poles: bool = False) -> np.ndarray:
        a = self.evaluate(theta, phi, b_value, regularize_poles)
        return solve_triangular(a, np.eye(self.size, dtype=complex), lower=False)


def default_m_tilde(K: int) -> Tuple[int, ...]:
    """默认 m̃_r = r，与右侧基 m = l 的取法一致"""
    return tuple(range(K + 1))


def _check_m_tilde(K: int, m_tilde: Sequence[int]) -> Tuple[int, ...]:
    m_tilde = tuple(int(m) for m in m_tilde)
    if len(m_tilde) != K + 1:
        raise QuantumNumberError(f"m̃ 需要 K+1={K + 1} 个分量，得到 {len(m_tilde)}")
    for r, m in enumerate(m_tilde):
        if abs(m) > r:
            raise QuantumNumberError(f"第 {r} 行要求 |m̃| ≤ {r}，得到 {m}", details={"row": r, "m": m})
    return m_tilde


def connection_matrix(K: int, m_tilde: Optional[Sequence[int]] = None, convention=PAPER) -> ConnectionMatrix:
    """
    A_K 的元 (r, c≥r) = C_c^{(K, l̃=r)}·e^{i(m̃_r - c)φ}·P_r^{m̃_r}(cos θ)/P_c^c(cos θ)
    """
    conv = GegenbauerConvention.from_key(convention)
    m_tilde = _check_m_tilde(K, default_m_tilde(K) if m_tilde is None else m_tilde)
    rows: List[Tuple[Optional[MatrixEntry], ...]] = []
    for r in range(K + 1):
        expansion = expand(K, r, conv)
        row: List[Optional[MatrixEntry]] = []
        for c in range(K + 1):
            coeff = expansion.coefficient(c) if c >= r else PolyB()
            if coeff.is_zero():
                row.append(None)
                continue
            row.append(MatrixEntry(coeff=coeff, phase=m_tilde[r] - c, num_l=r, num_m=m_tilde[r], den_l=c))
        rows.append(tuple(row))
    return ConnectionMatrix(K=K, m_tilde=m_tilde, entries=tuple(rows), convention=conv)


def perturbed_vector(K: int, b_value: float, chi: float, theta: float, phi: float,
                     m_tilde: Sequence[int]) -> np.ndarray:
    """解向量 X_K：分量 Ψ_{K r m̃_r} = e^{-α_K χ/2}·ψ_K^r(χ)·P_r^{m̃_r}(cos θ)·e^{i m̃_r φ}"""
    out = np.zeros(K + 1, dtype=complex)
    for r in range(K + 1):
        radial = DampedTrigExpr.damped(psi_chi(K, r), K)
        out[r] = trig_eval(radial, b_value, chi) * sph_harmonic(r, m_tilde[r], theta, phi, normalized=False)
    return out


def free_vector(K: int, b_value: float, chi: float, theta: float, phi: float,
                convention=PAPER, damped: bool = True) -> np.ndarray:
    """自由基向量：分量 Y_{Kcc}（damped 时为 Ỹ_{Kcc}），角向因子未归一化"""
    return np.array([
        hyper_harmonic(QuantumNumbers(K, c, c), damped, chi, theta, phi, b_value, convention, normalized=False)
        for c in range(K + 1)
    ], dtype=complex)


@dataclass(frozen=True)
class SlReport:
    """Ψ 向量 = e^{-α_K χ/2}·A_K·Y 向量 的逐点校验结果"""

    K: int
    b_value: float
    points: int
    max_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "K": self.K,
            "b": self.b_value,
            "points": self.points,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def verify_sl(
    K: int,
    b_value: float,
    sample_points: Iterable[Tuple[float, float, float]],
    convention=PAPER,
    m_tilde: Optional[Sequence[int]] = None,
    tolerance: float = 1e-10,
) -> SlReport:
    """在采样点 (χ, θ, φ) 上比较 X_K 与 A_K·Ỹ_K，报告最大绝对残差"""
    matrix = connection_matrix(K, m_tilde, convention)
    worst = 0.0
    count = 0
    for chi, theta, phi in sample_points:
        left = perturbed_vector(K, b_value, chi, theta, phi, matrix.m_tilde)
        right = matrix.evaluate(theta, phi, b_value) @ free_vector(K, b_value, chi, theta, phi, matrix.convention)
        worst = max(worst, float(np.max(np.abs(left - right))))
        count += 1
    logger.debug("verify_sl K=%d b=%g: %d 个点，最大残差 %.3e", K, b_value, count, worst)
    return SlReport(K=K, b_value=b_value, points=count, max_residual=worst, tolerance=tolerance)
