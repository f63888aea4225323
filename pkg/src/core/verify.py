"""
径向算子的精确符号作用与各恒等式校验

恒等式先在精确算术中验证（差为零多项式），只有 A_K 共轭变换这一处本质上
三维的关系在采样点上做数值比对。
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.core.expansion import (
    PAPER,
    check_expansion_quadrature,
    connection_matrix,
    expand,
    free_vector,
    perturbed_vector,
    table1,
    table1_diff,
    verify_sl,
)
from src.core.polycore import (
    AnyTrig,
    DampedTrigExpr,
    PolyB,
    TrigExpr,
    trig_differentiate,
    trig_eval,
    trig_mul_cot,
    trig_mul_csc2,
)
from src.core.specfun import GegenbauerConvention, psi_chi, s_function, sph_harmonic
from src.core.spectrum import alpha, energy_exact
from src.exceptions import QuantumNumberError

logger = logging.getLogger(__name__)

# 已发表的 D_K S_K^l = c·csc²χ·S_K^{l+1} 常数
PAPER_RECURRENCES: Dict[Tuple[int, int], Fraction] = {
    (1, 0): Fraction(2),
    (2, 0): Fraction(2),
    (2, 1): Fraction(4),
    (3, 1): Fraction(20, 3),
    (3, 2): Fraction(6),
}


class OperatorKind(Enum):
    CASIMIR_RADIAL = "casimir_radial"
    PERTURBED = "perturbed"
    LADDER = "ladder"
    ROSEN_MORSE_1D = "rosen_morse_1d"


@dataclass(frozen=True)
class RadialOperator:
    """
    径向微分算子；index 对 LADDER 是 K，其余是角动量 l

    CASIMIR_RADIAL  -(1/sin²χ)d/dχ(sin²χ·d/dχ) + l(l+1)csc²χ
    PERTURBED       CASIMIR_RADIAL - 2b·cot χ
    LADDER          d/dχ - K·cot χ
    ROSEN_MORSE_1D  -d²/dχ² - 2b·cot χ + l(l+1)csc²χ
    """

    kind: OperatorKind
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise QuantumNumberError(f"算子指标必须非负，得到: {self.index}")

    @classmethod
    def casimir_radial(cls, l: int) -> "RadialOperator":
        return cls(OperatorKind.CASIMIR_RADIAL, l)

    @classmethod
    def perturbed(cls, l: int) -> "RadialOperator":
        return cls(OperatorKind.PERTURBED, l)

    @classmethod
    def ladder(cls, K: int) -> "RadialOperator":
        return cls(OperatorKind.LADDER, K)

    @classmethod
    def rosen_morse(cls, l: int) -> "RadialOperator":
        return cls(OperatorKind.ROSEN_MORSE_1D, l)

    def apply(self, f: AnyTrig) -> AnyTrig:
        return apply(self, f)


def _coulomb_term(f: AnyTrig) -> AnyTrig:
    # -2b·cot χ·f
    return trig_mul_cot(f).scale(PolyB([0, -2]))


def _centrifugal_term(l: int, f: AnyTrig) -> AnyTrig:
    return trig_mul_csc2(f).scale(l * (l + 1))


def apply(op: RadialOperator, f: AnyTrig) -> AnyTrig:
    """算子对 TrigExpr 或 DampedTrigExpr 的精确像，阻尼因子由求导规则处理"""
    if op.kind is OperatorKind.LADDER:
        return trig_differentiate(f) - trig_mul_cot(f).scale(op.index)

    d1 = trig_differentiate(f)
    d2 = trig_differentiate(d1)
    if op.kind is OperatorKind.ROSEN_MORSE_1D:
        return -d2 + _coulomb_term(f) + _centrifugal_term(op.index, f)

    # -(1/s²)(s²f')' = -f'' - 2cot·f'
    result = -d2 - trig_mul_cot(d1).scale(2) + _centrifugal_term(op.index, f)
    if op.kind is OperatorKind.PERTURBED:
        result = result + _coulomb_term(f)
    return result


def _is_zero(expr: AnyTrig) -> bool:
    return expr.is_zero()


def perturbed_eigenvalue(K: int) -> PolyB:
    """K(K+2) - α_K²/4"""
    return PolyB.constant(K * (K + 2)) - alpha(K) ** 2 / 4


def check_free_eigen(K: int, l: int, convention=PAPER) -> bool:
    """CasimirRadial(l)·S_K^l == K(K+2)·S_K^l"""
    s = s_function(K, l, GegenbauerConvention.from_key(convention))
    return _is_zero(apply(RadialOperator.casimir_radial(l), s) - s.scale(K * (K + 2)))


def check_perturbed_eigen(K: int, l_tilde: int) -> bool:
    """[CasimirRadial(l̃) - 2b·cot χ](e^{-α_K χ/2}ψ) == (K(K+2) - α_K²/4)(e^{-α_K χ/2}ψ)"""
    f = DampedTrigExpr.damped(psi_chi(K, l_tilde), K)
    image = apply(RadialOperator.perturbed(l_tilde), f)
    return _is_zero(image - f.scale(perturbed_eigenvalue(K)))


def check_dilated_casimir(K: int, l_tilde: int) -> bool:
    """去掉阻尼后的形式：(CasimirRadial(l̃) + α_K·D_K)ψ == K(K+2)ψ"""
    psi = psi_chi(K, l_tilde)
    image = apply(RadialOperator.casimir_radial(l_tilde), psi) + apply(RadialOperator.ladder(K), psi).scale(alpha(K))
    return _is_zero(image - psi.scale(K * (K + 2)))


def check_transfer_identity(K: int, l_tilde: int, convention=PAPER) -> bool:
    """(l̃(l̃+1)csc²χ + α_K·D_K) Σ C_l S_K^l == Σ l(l+1)csc²χ·C_l S_K^l"""
    row = expand(K, l_tilde, convention)
    ladder = RadialOperator.ladder(K)
    a = alpha(K)
    lhs = TrigExpr.zero()
    rhs = TrigExpr.zero()
    for l, c in row.coeffs.items():
        term = s_function(K, l, row.convention).scale(c)
        lhs = lhs + _centrifugal_term(l_tilde, term) + apply(ladder, term).scale(a)
        rhs = rhs + _centrifugal_term(l, term)
    return _is_zero(lhs - rhs)


def check_radial_reduction(K: int, l_tilde: int) -> bool:
    """U = sin χ·e^{-α_K χ/2}ψ 满足 -U'' + V_RM·U = (ε_K + 1)U"""
    u = DampedTrigExpr.damped(psi_chi(K, l_tilde) * TrigExpr.sin_power(1), K)
    image = apply(RadialOperator.rosen_morse(l_tilde), u)
    return _is_zero(image - u.scale(energy_exact(K) + 1))


def check_ladder_annihilation(K: int) -> bool:
    """D_K sin^K χ == 0"""
    return _is_zero(apply(RadialOperator.ladder(K), TrigExpr.sin_power(K)))


def check_energy_consistency(K: int) -> bool:
    return energy_exact(K) == perturbed_eigenvalue(K)


@dataclass(frozen=True)
class RecurrenceResult:
    """D_K S_K^l 与 csc²χ·S_K^{l+1} 的比例关系；constant 为 None 表示不成比例"""

    K: int
    l: int
    constant: Optional[Fraction]
    published: Optional[Fraction]
    convention: GegenbauerConvention

    @property
    def proportional(self) -> bool:
        return self.constant is not None

    @property
    def agrees_with_published(self) -> Optional[bool]:
        if self.published is None:
            return None
        return self.constant == self.published

    def to_dict(self) -> Dict[str, Any]:
        return {
            "K": self.K,
            "l": self.l,
            "constant": None if self.constant is None else str(self.constant),
            "published": None if self.published is None else str(self.published),
            "proportional": self.proportional,
            "agrees_with_published": self.agrees_with_published,
            "convention": self.convention.value,
        }


def _proportionality(image: TrigExpr, target: TrigExpr) -> Optional[Fraction]:
    key, ref = next(iter(target.items()))
    ratio = image.coefficient(*key)
    if not ratio.is_constant():
        return None
    constant = ratio.constant_term() / ref.constant_term()
    return constant if image == target.scale(constant) else None


def check_recurrences(cases: Iterable[Tuple[int, int]], convention=PAPER) -> List[RecurrenceResult]:
    """对每个 (K, l)，l < K，判断 D_K S_K^l 是否为 csc²χ·S_K^{l+1} 的有理倍数"""
    conv = GegenbauerConvention.from_key(convention)
    results: List[RecurrenceResult] = []
    for K, l in cases:
        if not 0 <= l < K:
            raise QuantumNumberError(f"递推关系要求 0 ≤ l < K，得到 K={K}, l={l}")
        image = apply(RadialOperator.ladder(K), s_function(K, l, conv))
        target = trig_mul_csc2(s_function(K, l + 1, conv))
        result = RecurrenceResult(K, l, _proportionality(image, target), PAPER_RECURRENCES.get((K, l)), conv)
        if not result.proportional:
            logger.info("D_%d S_%d^%d 不是 csc²χ·S_%d^%d 的倍数", K, K, l, K, l + 1)
        elif result.agrees_with_published is False:
            logger.warning(
                "递推常数不一致 (K=%d, l=%d, %s): 计算值 %s，已发表值 %s",
                K, l, conv.value, result.constant, result.published,
            )
        results.append(result)
    return results


@dataclass(frozen=True)
class VoalaReport:
    """
    共轭变换关系的采样校验

    inverse_residual  max|e^{α_K χ/2}·A_K⁻¹·X - Y|
    main_residual     max|(𝒦 - 2b cot χ)X - e^{-α_K χ/2}·A_K·(𝒦 - α_K²/4)·Y|
    eigen_residual    max|(𝒦 - 2b cot χ)X - (K(K+2) - α_K²/4)·X|
    """

    K: int
    b_value: float
    points: int
    inverse_residual: float
    main_residual: float
    eigen_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return max(self.inverse_residual, self.main_residual, self.eigen_residual) <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "K": self.K,
            "b": self.b_value,
            "points": self.points,
            "inverse_residual": self.inverse_residual,
            "main_residual": self.main_residual,
            "eigen_residual": self.eigen_residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def check_voala(
    K: int,
    b_value: float,
    sample_points: Iterable[Tuple[float, float, float]],
    convention=PAPER,
    m_tilde: Optional[Sequence[int]] = None,
    tolerance: float = 1e-8,
) -> VoalaReport:
    """
    Raises:
        PoleError: 采样点落在 θ ∈ {0, π}
    """
    conv = GegenbauerConvention.from_key(convention)
    matrix = connection_matrix(K, m_tilde, conv)
    a = 2.0 * b_value / (K + 1)
    eigenvalue = K * (K + 2) - a * a / 4.0
    lhs_radial = [
        apply(RadialOperator.perturbed(r), DampedTrigExpr.damped(psi_chi(K, r), K)) for r in range(K + 1)
    ]
    casimir_radial = [apply(RadialOperator.casimir_radial(c), s_function(K, c, conv)) for c in range(K + 1)]

    inv_res = main_res = eig_res = 0.0
    count = 0
    for chi, theta, phi in sample_points:
        x_vec = perturbed_vector(K, b_value, chi, theta, phi, matrix.m_tilde)
        y_vec = free_vector(K, b_value, chi, theta, phi, conv, damped=False)
        lhs = np.array([
            trig_eval(lhs_radial[r], b_value, chi)
            * sph_harmonic(r, matrix.m_tilde[r], theta, phi, normalized=False)
            for r in range(K + 1)
        ], dtype=complex)
        casimir_y = np.array([
            trig_eval(casimir_radial[c], b_value, chi) * sph_harmonic(c, c, theta, phi, normalized=False)
            for c in range(K + 1)
        ], dtype=complex)
        a_mat = matrix.evaluate(theta, phi, b_value)
        a_inv = matrix.inverse(theta, phi, b_value)
        damping = math.exp(-a * chi / 2.0)
        rhs = damping * (a_mat @ (casimir_y - a * a / 4.0 * y_vec))

        inv_res = max(inv_res, float(np.max(np.abs(a_inv @ x_vec / damping - y_vec))))
        main_res = max(main_res, float(np.max(np.abs(lhs - rhs))))
        eig_res = max(eig_res, float(np.max(np.abs(lhs - eigenvalue * x_vec))))
        count += 1
    logger.debug(
        "check_voala K=%d b=%g: inverse=%.3e main=%.3e eigen=%.3e",
        K, b_value, inv_res, main_res, eig_res,
    )
    return VoalaReport(K, b_value, count, inv_res, main_res, eig_res, tolerance)


def sample_points(count: int, seed: int, margin: float = 0.05) -> List[Tuple[float, float, float]]:
    """在 χ, θ ∈ (margin, π - margin)、φ ∈ [0, 2π) 上抽取可复现的随机点"""
    rng = np.random.default_rng(seed)
    chi = rng.uniform(margin, math.pi - margin, count)
    theta = rng.uniform(margin, math.pi - margin, count)
    phi = rng.uniform(0.0, 2 * math.pi, count)
    return [(float(c), float(t), float(p)) for c, t, p in zip(chi, theta, phi)]


@dataclass(frozen=True)
class IdentityCheck:
    """报告中的一项；hard 为 False 的项只报告、不计入通过与否"""

    name: str
    passed: bool
    hard: bool = True
    K: Optional[int] = None
    l_tilde: Optional[int] = None
    detail: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "K": self.K,
            "l_tilde": self.l_tilde,
            "passed": self.passed,
            "hard": self.hard,
            "detail": self.detail,
        }


@dataclass
class VerificationReport:
    k_max: int
    b_values: List[float]
    convention: GegenbauerConvention
    checks: List[IdentityCheck] = field(default_factory=list)
    recurrences: List[RecurrenceResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.hard)

    @property
    def failures(self) -> List[IdentityCheck]:
        return [c for c in self.checks if c.hard and not c.passed]

    @property
    def discrepancies(self) -> List[RecurrenceResult]:
        return [r for r in self.recurrences if r.agrees_with_published is False]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k_max": self.k_max,
            "b_values": list(self.b_values),
            "convention": self.convention.value,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "recurrences": [r.to_dict() for r in self.recurrences],
            "discrepancies": [r.to_dict() for r in self.discrepancies],
            "failures": [c.to_dict() for c in self.failures],
        }


def run_verification(
    k_max: int,
    b_values: Sequence[float],
    point_count: int = 50,
    seed: int = 0,
    convention=PAPER,
    matrix_k_max: int = 3,
) -> VerificationReport:
    """
    全部恒等式校验

    精确校验覆盖 K ≤ k_max；A_K 的数值校验覆盖 K ≤ min(k_max, matrix_k_max)。
    """
    if k_max < 0:
        raise ValueError(f"k_max 必须非负，得到: {k_max}")
    conv = GegenbauerConvention.from_key(convention)
    report = VerificationReport(k_max=k_max, b_values=[float(b) for b in b_values], convention=conv)
    add = report.checks.append

    for K in range(k_max + 1):
        add(IdentityCheck("energy_consistency", check_energy_consistency(K), K=K))
        add(IdentityCheck("ladder_annihilation", check_ladder_annihilation(K), K=K))
        for lt in range(K + 1):
            add(IdentityCheck("free_eigen", check_free_eigen(K, lt, conv), K=K, l_tilde=lt))
            add(IdentityCheck("perturbed_eigen", check_perturbed_eigen(K, lt), K=K, l_tilde=lt))
            add(IdentityCheck("dilated_casimir", check_dilated_casimir(K, lt), K=K, l_tilde=lt))
            add(IdentityCheck("transfer_identity", check_transfer_identity(K, lt, conv), K=K, l_tilde=lt))
            add(IdentityCheck("radial_reduction", check_radial_reduction(K, lt), K=K, l_tilde=lt))
        logger.info("K=%d 的精确校验完成", K)

    diffs = table1_diff(table1(min(k_max, 3), PAPER))
    # table1_diff 也会把未计算的已发表行列为缺失
    diffs = [d for d in diffs if d["K"] <= k_max]
    add(IdentityCheck("table1_reproduction", not diffs, detail={"diffs": diffs}))

    cases = [(K, l) for K in range(1, k_max + 1) for l in range(K)]
    report.recurrences.extend(check_recurrences(cases, conv))
    for r in report.recurrences:
        add(IdentityCheck("recurrence", r.agrees_with_published is not False, hard=False,
                          K=r.K, l_tilde=r.l, detail=r.to_dict()))

    points = sample_points(point_count, seed)
    for K in range(min(k_max, matrix_k_max) + 1):
        for b in report.b_values:
            sl = verify_sl(K, b, points, conv)
            add(IdentityCheck("connection_matrix", sl.passed, K=K, detail=sl.to_dict()))
            voala = check_voala(K, b, points, conv)
            add(IdentityCheck("dilation_similarity", voala.passed, K=K, detail=voala.to_dict()))
            for lt in range(K + 1):
                quad = check_expansion_quadrature(K, lt, b, conv)
                add(IdentityCheck("expansion_quadrature", quad.passed, K=K, l_tilde=lt, detail=quad.to_dict()))

    for failure in report.failures:
        logger.error("校验失败: %s K=%s l̃=%s", failure.name, failure.K, failure.l_tilde)
    logger.info(
        "校验结束: %d 项，%d 项失败，%d 个递推常数与已发表值不一致",
        len(report.checks), len(report.failures), len(report.discrepancies),
    )
    return report
