"""
特殊函数

- Gegenbauer 多项式，两种归一化约定：
  STANDARD         C_0 = 1, C_1 = 2λx，三项递推
  PAPER_RODRIGUES  G_n = (-1)^n·n!·C_n（能逐项复现 ψ 的分解表）
- S_K^l(χ) = sin^l χ·G_{K-l}^{l+1}(cos χ)
- Romanovski 多项式 R_n^{α,β}，由 Rodrigues 公式化成的 n 步线性递推
- ψ_K^l̃(χ) = sin^K χ·R_{K-l̃}^{α_K, -K}(cot χ)
- 连带 Legendre 函数（Condon–Shortley 相位）、球谐函数、超球谐函数
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import lpmv

from src.core.polycore import DampedTrigExpr, PolyB, TrigExpr, as_rational, trig_eval, trig_normalize
from src.exceptions import QuantumNumberError

logger = logging.getLogger(__name__)


class GegenbauerConvention(Enum):
    """Gegenbauer 多项式归一化约定"""

    STANDARD = "standard"
    PAPER_RODRIGUES = "paper"

    @classmethod
    def from_key(cls, key) -> "GegenbauerConvention":
        """
        规范化约定名称

        Args:
            key: 约定枚举或别名，例如 'paper'、'paper_rodrigues'、'standard'、'std'
        """
        if isinstance(key, cls):
            return key
        k = str(key or "").strip().lower().replace("-", "_")
        try:
            return _CONVENTION_ALIASES[k]
        except KeyError:
            raise ValueError(f"未知的 Gegenbauer 约定: {key!r}（可选: standard / paper）") from None


_CONVENTION_ALIASES = {
    "standard": GegenbauerConvention.STANDARD,
    "std": GegenbauerConvention.STANDARD,
    "paper": GegenbauerConvention.PAPER_RODRIGUES,
    "paper_rodrigues": GegenbauerConvention.PAPER_RODRIGUES,
    "paperrodrigues": GegenbauerConvention.PAPER_RODRIGUES,
    "rodrigues": GegenbauerConvention.PAPER_RODRIGUES,
}


@dataclass(frozen=True)
class QuantumNumbers:
    """S^3 上的态标记 (K, l, m)"""

    K: int
    l: int
    m: int

    def __post_init__(self):
        if self.K < 0 or not (0 <= self.l <= self.K) or abs(self.m) > self.l:
            raise QuantumNumberError(
                f"量子数不合法: K={self.K}, l={self.l}, m={self.m}（要求 0 ≤ l ≤ K, |m| ≤ l）",
                details={"K": self.K, "l": self.l, "m": self.m},
            )


@dataclass(frozen=True)
class RomanovskiParams:
    """R_n^{α,β}：n 为次数，α ∈ Q[b]，β ∈ Q"""

    n: int
    alpha: PolyB
    beta: Fraction

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"Romanovski 次数必须非负，得到: {self.n}")
        object.__setattr__(self, "beta", as_rational(self.beta))

    @classmethod
    def for_level(cls, K: int, l_tilde: int) -> "RomanovskiParams":
        """微扰波函数用到的参数：n = K - l̃，β = -K，α = 2b/(K+1)"""
        _check_level(K, l_tilde)
        return cls(K - l_tilde, PolyB([0, Fraction(2, K + 1)]), Fraction(-K))


def _check_level(K: int, l: int) -> None:
    if K < 0 or not (0 <= l <= K):
        raise QuantumNumberError(f"要求 0 ≤ l ≤ K，得到 K={K}, l={l}", details={"K": K, "l": l})


@lru_cache(maxsize=None)
def _gegenbauer_standard(n: int, lam: Fraction) -> Tuple[Fraction, ...]:
    prev: Tuple[Fraction, ...] = (Fraction(1),)
    if n == 0:
        return prev
    cur: Tuple[Fraction, ...] = (Fraction(0), 2 * lam)
    for k in range(2, n + 1):
        nxt = [Fraction(0)] * (k + 1)
        for j, c in enumerate(cur):
            nxt[j + 1] += 2 * (k + lam - 1) * c
        for j, c in enumerate(prev):
            nxt[j] -= (k + 2 * lam - 2) * c
        prev, cur = cur, tuple(c / k for c in nxt)
    return cur


def gegenbauer(n: int, lam, convention=GegenbauerConvention.STANDARD) -> Tuple[Fraction, ...]:
    """
    Gegenbauer 多项式 x 的系数（下标 = 幂次）

    Args:
        n: 次数
        lam: 正的参数 λ
        convention: STANDARD 或 PAPER_RODRIGUES
    """
    if n < 0:
        raise ValueError(f"次数必须非负，得到: {n}")
    lam = as_rational(lam)
    if lam <= 0:
        raise ValueError(f"λ 必须为正，得到: {lam}")
    coeffs = _gegenbauer_standard(n, lam)
    if GegenbauerConvention.from_key(convention) is GegenbauerConvention.PAPER_RODRIGUES:
        factor = (-1) ** n * math.factorial(n)
        coeffs = tuple(c * factor for c in coeffs)
    return coeffs


def gegenbauer_norm(n: int, lam) -> float:
    """STANDARD 约定下 ∫_{-1}^{1} (1-x^2)^{λ-1/2} C_n^λ(x)^2 dx 的闭式"""
    lam = float(lam)
    log_value = (
        math.log(math.pi)
        + (1 - 2 * lam) * math.log(2)
        + math.lgamma(n + 2 * lam)
        - math.lgamma(n + 1)
        - math.log(n + lam)
        - 2 * math.lgamma(lam)
    )
    return math.exp(log_value)


@lru_cache(maxsize=None)
def s_function(K: int, l: int, convention=GegenbauerConvention.PAPER_RODRIGUES) -> TrigExpr:
    """S_K^l(χ) = sin^l χ·G_{K-l}^{l+1}(cos χ)，与 b 无关"""
    _check_level(K, l)
    coeffs = gegenbauer(K - l, l + 1, convention)
    return trig_normalize([(c, l, j) for j, c in enumerate(coeffs)])


def _xpoly_trim(coeffs: List[PolyB]) -> List[PolyB]:
    while len(coeffs) > 1 and coeffs[-1].is_zero():
        coeffs.pop()
    return coeffs


def _xpoly_derivative(coeffs: Sequence[PolyB]) -> List[PolyB]:
    return [coeffs[j] * j for j in range(1, len(coeffs))]


@lru_cache(maxsize=None)
def romanovski(params: RomanovskiParams) -> Tuple[PolyB, ...]:
    """
    Romanovski 多项式 R_n^{α,β}(x)，系数属于 Q[b]

    由 Rodrigues 公式 R_n = (1/ω)·d^n/dx^n[(1+x^2)^n·ω]，ω = (1+x^2)^{β-1}·exp(-α·arccot x)
    反复使用 d/dx[(1+x^2)^p·E] = (2px + α)(1+x^2)^{p-1}·E 得到：
        Q_0 = 1，Q_{k+1} = (1+x^2)·Q_k' + (2·p_k·x + α)·Q_k，p_k = n + β - 1 - k
    """
    n, alpha, beta = params.n, params.alpha, params.beta
    q: List[PolyB] = [PolyB.constant(1)]
    for k in range(n):
        p_k = n + beta - 1 - k
        deriv = _xpoly_derivative(q)
        nxt = [PolyB()] * (len(q) + 1)
        for j, c in enumerate(deriv):
            nxt[j] = nxt[j] + c
            nxt[j + 2] = nxt[j + 2] + c
        for j, c in enumerate(q):
            nxt[j + 1] = nxt[j + 1] + c * (2 * p_k)
            nxt[j] = nxt[j] + c * alpha
        q = _xpoly_trim(nxt)
    return tuple(q)


def romanovski_ode_residual(params: RomanovskiParams) -> Tuple[PolyB, ...]:
    """(1+x^2)R'' + 2(α/2 + βx)R' - n(2β+n-1)R 的系数；恒为零时返回空元组"""
    r = list(romanovski(params))
    d1 = _xpoly_derivative(r)
    d2 = _xpoly_derivative(d1)
    n, alpha, beta = params.n, params.alpha, params.beta
    size = len(r) + 2
    res = [PolyB()] * size
    for j, c in enumerate(d2):
        res[j] = res[j] + c
        res[j + 2] = res[j + 2] + c
    for j, c in enumerate(d1):
        res[j] = res[j] + c * alpha
        res[j + 1] = res[j + 1] + c * (2 * beta)
    eigen = n * (2 * beta + n - 1)
    for j, c in enumerate(r):
        res[j] = res[j] - c * eigen
    while res and res[-1].is_zero():
        res.pop()
    return tuple(res)


@lru_cache(maxsize=None)
def psi_chi(K: int, l_tilde: int) -> TrigExpr:
    """ψ_K^l̃(χ) = sin^K χ·R_{K-l̃}^{α_K, -K}(cot χ)，x^j·sin^K → sin^{K-j}·cos^j"""
    coeffs = romanovski(RomanovskiParams.for_level(K, l_tilde))
    return trig_normalize([(c, K - j, j) for j, c in enumerate(coeffs)])


def _scalar_or_array(values: np.ndarray):
    return values.item() if values.ndim == 0 else values


def assoc_legendre(l: int, m: int, x):
    """
    连带 Legendre 函数 P_l^m(x)，含 Condon–Shortley 相位 (-1)^m（scipy.special.lpmv 的约定）

    负 m 用 P_l^{-m} = (-1)^m·(l-m)!/(l+m)!·P_l^m 换算。
    """
    if l < 0 or abs(m) > l:
        raise QuantumNumberError(f"要求 |m| ≤ l，得到 l={l}, m={m}", details={"l": l, "m": m})
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) > 1 + 1e-12):
        raise ValueError("连带 Legendre 函数要求 |x| ≤ 1")
    x_arr = np.clip(x_arr, -1.0, 1.0)
    if m < 0:
        mm = -m
        factor = (-1) ** mm * math.factorial(l - mm) / math.factorial(l + mm)
        return _scalar_or_array(factor * lpmv(mm, l, x_arr))
    return _scalar_or_array(np.asarray(lpmv(m, l, x_arr), dtype=float))


def sph_harmonic(l: int, m: int, theta, phi, normalized: bool = True):
    """
    球谐函数 Y_l^m(θ, φ)

    Args:
        normalized: True 为单位球面上正交归一；False 时返回 P_l^m(cos θ)·e^{imφ}，
            即连接矩阵恒等式所用的未归一化角向因子
    """
    norm = 1.0
    if normalized:
        norm = math.sqrt((2 * l + 1) / (4 * math.pi) * math.factorial(l - m) / math.factorial(l + m))
    theta_arr = np.asarray(theta, dtype=float)
    phi_arr = np.asarray(phi, dtype=float)
    value = norm * np.asarray(assoc_legendre(l, m, np.cos(theta_arr))) * np.exp(1j * m * phi_arr)
    return complex(value) if np.ndim(value) == 0 else value


def hyper_harmonic(
    q: QuantumNumbers,
    damped: bool,
    chi,
    theta,
    phi,
    b_value: float = 0.0,
    convention=GegenbauerConvention.PAPER_RODRIGUES,
    normalized: bool = True,
):
    """Y_{Klm} = S_K^l(χ)·Y_l^m(θ,φ)；damped 时再乘 exp(-α_K·χ/2)"""
    body = s_function(q.K, q.l, GegenbauerConvention.from_key(convention))
    radial = DampedTrigExpr(q.K, 1 if damped else 0, body)
    value = np.asarray(trig_eval(radial, b_value, chi)) * np.asarray(
        sph_harmonic(q.l, q.m, theta, phi, normalized)
    )
    return complex(value) if np.ndim(value) == 0 else value


@lru_cache(maxsize=None)
def harmonic_norm(K: int, l: int, convention=GegenbauerConvention.PAPER_RODRIGUES, order: int = 64) -> float:
    """N_{Kl} = ∫_0^π S_K^l(χ)^2·sin^2 χ dχ，Gauss–Legendre 求积"""
    # 延迟导入，避免与 eigensolver 循环依赖
    from src.core.eigensolver import gauss_legendre

    rule = gauss_legendre(order).mapped(0.0, math.pi)
    values = trig_eval(s_function(K, l, GegenbauerConvention.from_key(convention)), 0.0, rule.nodes)
    return float(np.sum(rule.weights * values ** 2 * np.sin(rule.nodes) ** 2))
