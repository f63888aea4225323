"""
精确算术内核

- Rational: fractions.Fraction（任意精度整数，始终为最简分数）
- PolyB: 耦合强度 b 的多项式，系数为 Rational
- TrigExpr: Σ p(b)·sin^p(χ)·cos^e(χ) 的规范形式（p ∈ Z 可为负，e ∈ {0, 1}）
- DampedTrigExpr: 额外携带阻尼因子 exp(-r·α_K·χ/2)，α_K = 2b/(K+1)

规范形式中 cos^2 一律改写为 1 - sin^2，因此两个表达式相等当且仅当系数字典相等。
所有对象构造后不可变，可以在线程之间自由共享。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np

from src.exceptions import PoleError

logger = logging.getLogger(__name__)

Rational = Fraction
TrigKey = Tuple[int, int]

# |sin χ| 小于该值即视为落在极点 χ ∈ {0, π}
POLE_TOLERANCE = 1e-12


def as_rational(value) -> Fraction:
    """把 int / Fraction / str 转成 Fraction；浮点数会破坏精确性，直接拒绝"""
    if isinstance(value, bool):
        raise TypeError("bool 不能作为精确系数")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"精确运算只接受 int / Fraction / str，得到: {type(value).__name__}")


class PolyB:
    """b 的精确多项式，coeffs[i] 是 b^i 的系数；末尾零系数会被去掉"""

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [as_rational(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self._coeffs: Tuple[Fraction, ...] = tuple(cs)

    @classmethod
    def constant(cls, value) -> "PolyB":
        return cls([value])

    @classmethod
    def b(cls) -> "PolyB":
        return cls([0, 1])

    @classmethod
    def from_json(cls, values: Iterable[str]) -> "PolyB":
        return cls(Fraction(v) for v in values)

    @property
    def coeffs(self) -> Tuple[Fraction, ...]:
        return self._coeffs

    @property
    def degree(self) -> int:
        """零多项式的次数记为 -1"""
        return len(self._coeffs) - 1

    def is_zero(self) -> bool:
        return not self._coeffs

    def is_constant(self) -> bool:
        return len(self._coeffs) <= 1

    def constant_term(self) -> Fraction:
        return self._coeffs[0] if self._coeffs else Fraction(0)

    @staticmethod
    def coerce(other) -> Optional["PolyB"]:
        if isinstance(other, PolyB):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return PolyB([other])
        return None

    def __add__(self, other):
        o = self.coerce(other)
        if o is None:
            return NotImplemented
        a, b = self._coeffs, o._coeffs
        if len(a) < len(b):
            a, b = b, a
        res = list(a)
        for i, c in enumerate(b):
            res[i] += c
        return PolyB(res)

    __radd__ = __add__

    def __neg__(self) -> "PolyB":
        return PolyB(-c for c in self._coeffs)

    def __sub__(self, other):
        o = self.coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self.coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self.coerce(other)
        if o is None:
            return NotImplemented
        if self.is_zero() or o.is_zero():
            return PolyB()
        a, b = self._coeffs, o._coeffs
        res = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x == 0:
                continue
            for j, y in enumerate(b):
                res[i + j] += x * y
        return PolyB(res)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            divisor = Fraction(other)
            return PolyB(c / divisor for c in self._coeffs)
        return NotImplemented

    def __pow__(self, n: int) -> "PolyB":
        if not isinstance(n, int) or n < 0:
            raise ValueError(f"只支持非负整数次幂，得到: {n!r}")
        result = PolyB.constant(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        o = self.coerce(other)
        if o is None:
            return NotImplemented
        return self._coeffs == o._coeffs

    def __hash__(self):
        return hash(self._coeffs)

    def __bool__(self):
        return bool(self._coeffs)

    def __call__(self, b_value):
        """Horner 求值；传入 Fraction 得到精确值，传入 float 得到浮点值"""
        result = Fraction(0) if isinstance(b_value, (int, Fraction)) else 0.0
        for c in reversed(self._coeffs):
            result = result * b_value + (c if isinstance(result, Fraction) else float(c))
        return result

    def to_json(self) -> List[str]:
        return [str(c) for c in self._coeffs]

    def __str__(self) -> str:
        if not self._coeffs:
            return "0"
        parts: List[str] = []
        for power in range(len(self._coeffs) - 1, -1, -1):
            c = self._coeffs[power]
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if power == 0:
                body = str(mag)
            else:
                var = "b" if power == 1 else f"b^{power}"
                body = var if mag == 1 else f"{mag}*{var}"
            parts.append(f"{sign}{body}")
        text = "".join(parts)
        return text[1:] if text.startswith("+") else text

    def __repr__(self) -> str:
        return f"PolyB({self})"


class TrigExpr:
    """规范三角表达式，键为 (sin 次数, cos 次数 ∈ {0,1})，系数为非零 PolyB"""

    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[Mapping[TrigKey, Union[PolyB, int, Fraction]]] = None):
        clean: Dict[TrigKey, PolyB] = {}
        for (p, e), coeff in (terms or {}).items():
            if e not in (0, 1):
                raise ValueError("cos 次数 ≥ 2 的项请先经过 trig_normalize")
            poly = PolyB.coerce(coeff)
            if poly is None:
                raise TypeError(f"系数必须是 PolyB 或精确标量，得到: {type(coeff).__name__}")
            if poly.is_zero():
                continue
            clean[(int(p), int(e))] = poly
        self._terms = clean

    @classmethod
    def zero(cls) -> "TrigExpr":
        return cls()

    @classmethod
    def sin_power(cls, p: int, coeff=1) -> "TrigExpr":
        return cls({(p, 0): coeff})

    @classmethod
    def cos_sin_power(cls, p: int, coeff=1) -> "TrigExpr":
        return cls({(p, 1): coeff})

    @property
    def terms(self) -> Mapping[TrigKey, PolyB]:
        return MappingProxyType(self._terms)

    def items(self) -> List[Tuple[TrigKey, PolyB]]:
        """按 (cos 次数, sin 次数) 排序，保证输出稳定"""
        return sorted(self._terms.items(), key=lambda kv: (kv[0][1], kv[0][0]))

    def is_zero(self) -> bool:
        return not self._terms

    def min_sin_power(self) -> int:
        return min((p for p, _ in self._terms), default=0)

    def b_degree(self) -> int:
        return max((c.degree for c in self._terms.values()), default=-1)

    def coefficient(self, sin_power: int, cos_power: int = 0) -> PolyB:
        return self._terms.get((sin_power, cos_power), PolyB())

    def scale(self, coeff) -> "TrigExpr":
        poly = PolyB.coerce(coeff)
        if poly is None:
            raise TypeError(f"缩放系数必须是 PolyB 或精确标量，得到: {type(coeff).__name__}")
        return TrigExpr({k: v * poly for k, v in self._terms.items()})

    def __add__(self, other):
        if not isinstance(other, TrigExpr):
            return NotImplemented
        res = dict(self._terms)
        for k, v in other._terms.items():
            res[k] = res.get(k, PolyB()) + v
        return TrigExpr(res)

    def __neg__(self) -> "TrigExpr":
        return TrigExpr({k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, TrigExpr):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, TrigExpr):
            raw = [
                (c1 * c2, p1 + p2, e1 + e2)
                for (p1, e1), c1 in self._terms.items()
                for (p2, e2), c2 in other._terms.items()
            ]
            return trig_normalize(raw)
        if PolyB.coerce(other) is not None:
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if PolyB.coerce(other) is not None:
            return self.scale(other)
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, TrigExpr):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for (p, e), c in self.items():
            coeff = str(c)
            if sum(1 for x in c.coeffs if x != 0) > 1:
                coeff = f"({coeff})"
            trig = f"cos*sin^{p}" if e else f"sin^{p}"
            parts.append(f"{coeff}*{trig}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"TrigExpr({self})"


@dataclass(frozen=True)
class DampedTrigExpr:
    """exp(-damping·α_K·χ/2)·body，α_K = 2b/(K+1)；damping = 0 表示无阻尼"""

    level_k: int
    damping: Fraction
    body: TrigExpr

    def __post_init__(self):
        if self.level_k < 0:
            raise ValueError(f"level_k 必须非负，得到: {self.level_k}")
        if not isinstance(self.body, TrigExpr):
            raise TypeError("body 必须是 TrigExpr")
        object.__setattr__(self, "damping", as_rational(self.damping))

    @classmethod
    def undamped(cls, body: TrigExpr, level_k: int = 0) -> "DampedTrigExpr":
        return cls(level_k, Fraction(0), body)

    @classmethod
    def damped(cls, body: TrigExpr, level_k: int, damping=1) -> "DampedTrigExpr":
        return cls(level_k, as_rational(damping), body)

    @property
    def derivative_rate(self) -> PolyB:
        """阻尼因子求导带出的系数 -r·b/(K+1)"""
        return PolyB([0, -self.damping / (self.level_k + 1)])

    def with_body(self, body: TrigExpr) -> "DampedTrigExpr":
        return DampedTrigExpr(self.level_k, self.damping, body)

    def _check_compatible(self, other: "DampedTrigExpr") -> None:
        if self.damping == 0 and other.damping == 0:
            return
        if (self.level_k, self.damping) != (other.level_k, other.damping):
            raise ValueError(
                f"阻尼因子不一致: (K={self.level_k}, r={self.damping}) vs (K={other.level_k}, r={other.damping})"
            )

    def __add__(self, other):
        if not isinstance(other, DampedTrigExpr):
            return NotImplemented
        self._check_compatible(other)
        return self.with_body(self.body + other.body)

    def __sub__(self, other):
        if not isinstance(other, DampedTrigExpr):
            return NotImplemented
        self._check_compatible(other)
        return self.with_body(self.body - other.body)

    def __neg__(self) -> "DampedTrigExpr":
        return self.with_body(-self.body)

    def scale(self, coeff) -> "DampedTrigExpr":
        return self.with_body(self.body.scale(coeff))

    def is_zero(self) -> bool:
        return self.body.is_zero()

    def __str__(self) -> str:
        if self.damping == 0:
            return str(self.body)
        return f"exp(-{self.damping}*alpha_{self.level_k}*chi/2)*[{self.body}]"


AnyTrig = Union[TrigExpr, DampedTrigExpr]


def trig_normalize(raw: Union[TrigExpr, Iterable[Tuple[object, int, int]]]) -> TrigExpr:
    """
    把 (系数, sin 次数, cos 次数) 列表化为规范形式

    cos^e = cos^(e mod 2)·(1 - sin^2)^(e // 2)，按二项式展开后合并同类项。
    对已经是 TrigExpr 的输入幂等。
    """
    if isinstance(raw, TrigExpr):
        raw = [(c, p, e) for (p, e), c in raw.items()]
    acc: Dict[TrigKey, PolyB] = {}
    for coeff, p, e in raw:
        poly = PolyB.coerce(coeff)
        if poly is None:
            raise TypeError(f"系数必须是 PolyB 或精确标量，得到: {type(coeff).__name__}")
        if e < 0:
            raise ValueError(f"cos 次数不能为负: {e}")
        if poly.is_zero():
            continue
        half, odd = divmod(e, 2)
        for j in range(half + 1):
            term = poly * (comb(half, j) * (-1) ** j)
            key = (p + 2 * j, odd)
            acc[key] = acc.get(key, PolyB()) + term
    return TrigExpr(acc)


def _differentiate_body(body: TrigExpr) -> TrigExpr:
    raw = []
    for (p, e), c in body.items():
        if e == 0:
            # d(s^p) = p·s^(p-1)·c
            if p != 0:
                raw.append((c * p, p - 1, 1))
        else:
            # d(s^p·c) = p·s^(p-1)·c^2 - s^(p+1)
            if p != 0:
                raw.append((c * p, p - 1, 2))
            raw.append((-c, p + 1, 0))
    return trig_normalize(raw)


def trig_differentiate(f: AnyTrig) -> AnyTrig:
    """对 χ 精确求导；阻尼因子按乘积法则贡献 -(r·b/(K+1))·f"""
    if isinstance(f, TrigExpr):
        return _differentiate_body(f)
    body = _differentiate_body(f.body)
    if f.damping != 0:
        body = body + f.body.scale(f.derivative_rate)
    return f.with_body(body)


def trig_mul_cot(f: AnyTrig) -> AnyTrig:
    """乘以 cot χ：sin 次数减一，cos 次数加一（cos^2 → 1 - sin^2）"""
    if isinstance(f, DampedTrigExpr):
        return f.with_body(trig_mul_cot(f.body))
    return trig_normalize([(c, p - 1, e + 1) for (p, e), c in f.items()])


def trig_mul_csc2(f: AnyTrig) -> AnyTrig:
    """乘以 csc^2 χ：sin 次数减二"""
    if isinstance(f, DampedTrigExpr):
        return f.with_body(trig_mul_csc2(f.body))
    return TrigExpr({(p - 2, e): c for (p, e), c in f.items()})


def poly_eval(p: PolyB, b_value):
    """双精度求值，b_value 可以是 float 或 numpy 数组"""
    result = 0.0
    for c in reversed(p.coeffs):
        result = result * b_value + float(c)
    return result


def trig_eval(f: AnyTrig, b_value: float, chi):
    """
    在 (b, χ) 处数值求值，χ 可为标量或 numpy 数组

    Raises:
        PoleError: 表达式含 csc 幂且 χ 落在 0 或 π
    """
    if isinstance(f, TrigExpr):
        f = DampedTrigExpr.undamped(f)
    chi_arr = np.asarray(chi, dtype=float)
    s = np.sin(chi_arr)
    c = np.cos(chi_arr)
    if f.body.min_sin_power() < 0 and np.any(np.abs(s) < POLE_TOLERANCE):
        raise PoleError(
            "含 csc 幂的表达式不能在 χ ∈ {0, π} 求值",
            details={"chi": chi_arr.tolist()},
        )
    total = np.zeros_like(chi_arr)
    for (p, e), coeff in f.body.items():
        term = poly_eval(coeff, b_value) * s ** p
        if e:
            term = term * c
        total = total + term
    if f.damping != 0:
        total = total * np.exp(-float(f.damping) * b_value * chi_arr / (f.level_k + 1))
    if total.ndim == 0:
        return float(total)
    return total
