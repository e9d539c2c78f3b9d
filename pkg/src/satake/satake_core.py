"""
局部因子代数模块 - 自旋 Euler 因子在 Satake 根、对称系数、Hecke 特征值
与素数幂系数展开之间的相互转换
"""
import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from src.config import config
from src.exceptions.exceptions import (
    InvalidLocalFactorError,
    MissingPrimeDataError,
    RootFindingError,
)

Number = Union[float, Fraction]


def primes_up_to(n: int) -> np.ndarray:
    """
    Eratosthenes 筛，返回不超过 n 的全部素数

    :param n: 上界（含）
    :return: int64 素数数组
    """
    if n < 2:
        return np.array([], dtype=np.int64)
    is_prime = np.ones(n + 1, dtype=bool)
    is_prime[:2] = False
    for i in range(2, math.isqrt(n) + 1):
        if is_prime[i]:
            is_prime[i * i::i] = False
    return np.flatnonzero(is_prime).astype(np.int64)


@dataclass(frozen=True)
class LocalFactor:
    """
    素数 p 处的四次自旋 Euler 因子 1 - e1 t + e2 t^2 - e1 t^3 + t^4
    """
    p: int
    e1: Number
    e2: Number

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 2:
            raise InvalidLocalFactorError(f"Local factor index must be an integer >= 2, got {self.p}")
        for name in ("e1", "e2"):
            value = getattr(self, name)
            if not isinstance(value, Fraction) and not math.isfinite(value):
                raise InvalidLocalFactorError(f"{name} at p={self.p} is not finite: {value}")

    @property
    def is_exact(self) -> bool:
        return isinstance(self.e1, Fraction) and isinstance(self.e2, Fraction)

    def polynomial(self) -> Tuple[Number, Number, Number, Number, Number]:
        """以 t 的升幂返回四次多项式系数"""
        return (1, -self.e1, self.e2, -self.e1, 1)

    def passes_necessary_bounds(self, slack: float = 0.0) -> bool:
        """温和性的必要条件 |e1| <= 4, |e2| <= 6（slack=0 时精确判断）"""
        return abs(self.e1) <= 4 + slack and abs(self.e2) <= 6 + slack


@dataclass(frozen=True)
class SpinParameters:
    """四个自旋参数 beta_1..beta_4（四次多项式零点的倒数）"""
    beta: Tuple[complex, complex, complex, complex]

    def moduli(self) -> np.ndarray:
        return np.abs(np.asarray(self.beta, dtype=complex))

    def is_inverse_closed(self, tol: float = 1e-8) -> bool:
        """多重集在 beta -> 1/beta 下封闭"""
        return _multiset_close(self.beta, [1.0 / b for b in self.beta], tol)

    def is_conjugation_closed(self, tol: float = 1e-8) -> bool:
        """多重集在复共轭下封闭（局部因子为实系数）"""
        return _multiset_close(self.beta, [b.conjugate() for b in self.beta], tol)


def _multiset_close(left: Sequence[complex], right: Sequence[complex], tol: float) -> bool:
    remaining = list(right)
    for value in left:
        distances = [abs(value - other) for other in remaining]
        idx = int(np.argmin(distances))
        if distances[idx] > tol:
            return False
        remaining.pop(idx)
    return True


@dataclass(frozen=True)
class EigenformData:
    """
    一个本征形式的元数据与全部素数 p <= prime_bound 的局部因子
    """
    weight: int
    fe_sign: int
    label: str
    locals: Dict[int, LocalFactor] = field(repr=False)
    prime_bound: int
    genuine: bool = True

    def __post_init__(self):
        if self.fe_sign not in (1, -1):
            raise InvalidLocalFactorError(f"fe_sign must be +1 or -1, got {self.fe_sign}")
        if self.fe_sign != (-1) ** self.weight:
            raise InvalidLocalFactorError(
                f"fe_sign {self.fe_sign} does not match the parity of weight {self.weight}")
        expected = primes_up_to(self.prime_bound)
        keys = np.fromiter(self.locals.keys(), dtype=np.int64, count=len(self.locals))
        if keys.size != expected.size or not np.array_equal(np.sort(keys), expected):
            missing = np.setdiff1d(expected, keys)
            if missing.size:
                prime = int(missing[0])
                raise MissingPrimeDataError(f"No local factor for prime {prime} (prime_bound={self.prime_bound})",
                                            prime=prime)
            extra = int(np.setdiff1d(keys, expected)[0])
            raise InvalidLocalFactorError(f"Local factor key {extra} is not a prime <= {self.prime_bound}")
        for p, local in self.locals.items():
            if local.p != p:
                raise InvalidLocalFactorError(f"Local factor stored under {p} is indexed by {local.p}")

    @cached_property
    def arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """按素数升序返回 (primes, e1, e2) 三个数组"""
        primes = np.array(sorted(self.locals), dtype=np.int64)
        e1 = np.array([float(self.locals[int(p)].e1) for p in primes], dtype=np.float64)
        e2 = np.array([float(self.locals[int(p)].e2) for p in primes], dtype=np.float64)
        return primes, e1, e2

    def covers(self, n: int) -> bool:
        return self.prime_bound >= n

    def require_primes_up_to(self, n: int):
        """
        校验 n 以内的每个素数都有局部数据

        :raises: MissingPrimeDataError 指出第一个缺失的素数
        """
        if self.prime_bound >= n:
            return
        beyond = primes_up_to(n)
        beyond = beyond[beyond > self.prime_bound]
        if beyond.size:
            prime = int(beyond[0])
            raise MissingPrimeDataError(
                f"Form '{self.label}' has no local factor for prime {prime} (prime_bound={self.prime_bound})",
                prime=prime)


def _unit_fraction(p: int, like: Number) -> Number:
    if isinstance(like, Fraction):
        return Fraction(1, p)
    return 1.0 / p


def local_coeffs(f: LocalFactor, J: int) -> List[Number]:
    """
    局部四次多项式的幂级数逆的前 J+1 项 a(p^0..p^J)

    :param f: 局部因子
    :param J: 最高指数
    :return: 系数列表 c_0..c_J，满足 c_j = e1 c_{j-1} - e2 c_{j-2} + e1 c_{j-3} - c_{j-4}
    """
    if J < 0:
        raise ValueError(f"J must be >= 0, got {J}")
    one = Fraction(1) if f.is_exact else 1.0
    zero = one - one
    c: List[Number] = [one]
    for j in range(1, J + 1):
        c1 = c[j - 1]
        c2 = c[j - 2] if j >= 2 else zero
        c3 = c[j - 3] if j >= 3 else zero
        c4 = c[j - 4] if j >= 4 else zero
        c.append(f.e1 * c1 - f.e2 * c2 + f.e1 * c3 - c4)
    return c


def local_lambda(f: LocalFactor, J: int) -> List[Number]:
    """
    Hecke 特征值序列 lambda(p^0..p^J)，即 a-级数乘以 (1 - t^2/p)

    :param f: 局部因子
    :param J: 最高指数
    :return: lambda(p^j) = a(p^j) - a(p^{j-2})/p
    """
    a = local_coeffs(f, J)
    inv_p = _unit_fraction(f.p, f.e1)
    return [a[j] - (a[j - 2] * inv_p if j >= 2 else 0) for j in range(J + 1)]


def hecke_to_local(p: int, lam_p: Number, lam_p2: Number) -> LocalFactor:
    """
    由 lambda(p), lambda(p^2) 恢复局部因子

    :return: e1 = lambda(p), e2 = lambda(p)^2 - lambda(p^2) - 1/p
    """
    inv_p = _unit_fraction(p, lam_p)
    return LocalFactor(p, lam_p, lam_p * lam_p - lam_p2 - inv_p)


def local_from_spin_pairs(p: int, u1: float, u2: float) -> LocalFactor:
    """
    由两对互逆根 {b, 1/b} 的和 u = b + 1/b 构造局部因子：
    e1 = u1 + u2, e2 = 2 + u1 u2
    """
    return LocalFactor(p, u1 + u2, 2.0 + u1 * u2)


def _snap(disc: complex, scale: float) -> complex:
    # 判别式在舍入噪声内时视为重根
    if abs(disc) <= 64 * np.finfo(float).eps * scale:
        return 0j
    return disc


def spin_roots(f: LocalFactor) -> SpinParameters:
    """
    求 t^4 - e1 t^3 + e2 t^2 - e1 t + 1 的四个根（回文代换 u = t + 1/t）

    :return: SpinParameters
    :raises: RootFindingError 如果残差超出容差
    """
    e1 = float(f.e1)
    e2 = float(f.e2)
    scale = 1.0 + abs(e1) + abs(e2)
    # u^2 - e1 u + (e2 - 2) = 0
    disc_u = _snap(complex(e1 * e1 - 4.0 * (e2 - 2.0)), scale * scale)
    sq = cmath.sqrt(disc_u)
    us = ((e1 + sq) / 2.0, (e1 - sq) / 2.0)
    roots: List[complex] = []
    for u in us:
        if abs(u.imag) <= 64 * np.finfo(float).eps * scale:
            u = complex(u.real, 0.0)
        # t^2 - u t + 1 = 0
        disc_t = _snap(u * u - 4.0, max(abs(u) ** 2, 4.0))
        st = cmath.sqrt(disc_t)
        roots.extend([(u + st) / 2.0, (u - st) / 2.0])

    coefficients = (1.0, -e1, e2, -e1, 1.0)
    tol = 1e-9 * scale
    polished = []
    for beta in roots:
        residual = abs(np.polyval(coefficients, beta))
        if residual > tol:
            derivative = np.polyval(np.polyder(coefficients), beta)
            if derivative != 0:
                beta = beta - np.polyval(coefficients, beta) / derivative
                residual = abs(np.polyval(coefficients, beta))
        if residual > tol:
            raise RootFindingError(
                f"Spin root residual {residual:.3e} exceeds {tol:.3e} at p={f.p}",
                coefficients=coefficients)
        polished.append(complex(beta))
    return SpinParameters(tuple(polished))


def is_tempered(f: LocalFactor, tol: float = None) -> bool:
    """
    判断局部因子是否温和（全部自旋参数模长为 1）

    :param f: 局部因子
    :param tol: 容差，默认使用配置中的 TEMPERED_TOL
    """
    tol = tol if tol is not None else config.TEMPERED_TOL
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if not f.passes_necessary_bounds(slack=4 * tol):
        return False
    moduli = spin_roots(f).moduli()
    return bool(np.all(np.abs(moduli - 1.0) <= tol))


def local_coeffs_batch(e1: np.ndarray, e2: np.ndarray, J: int) -> np.ndarray:
    """
    向量化的 local_coeffs，对一批素数同时递推

    :return: 形状 (len(e1), J+1) 的数组
    """
    e1 = np.asarray(e1, dtype=np.float64)
    e2 = np.asarray(e2, dtype=np.float64)
    out = np.zeros((e1.size, J + 1), dtype=np.float64)
    out[:, 0] = 1.0
    for j in range(1, J + 1):
        col = e1 * out[:, j - 1]
        if j >= 2:
            col -= e2 * out[:, j - 2]
        if j >= 3:
            col += e1 * out[:, j - 3]
        if j >= 4:
            col -= out[:, j - 4]
        out[:, j] = col
    return out


def local_lambda_batch(primes: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """由 local_coeffs_batch 的输出得到 lambda(p^j)"""
    lam = coeffs.copy()
    if coeffs.shape[1] > 2:
        lam[:, 2:] -= coeffs[:, :-2] / np.asarray(primes, dtype=np.float64)[:, None]
    return lam
