"""
系数引擎模块 - 乘性筛法构造 a_F(n), lambda_F(n), d_4(n) 稠密表及前缀和，
并提供交叉校验、符号计数与 Ramanujan-Petersson 界扫描
"""
import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np

from src.logger_config import logger
from src.config import config
from src.exceptions.exceptions import InvalidConfigurationError, TableTooSmallError
from src.satake.satake_core import (
    EigenformData,
    local_coeffs_batch,
    local_lambda_batch,
    primes_up_to,
)


@dataclass(frozen=True)
class CoeffTable:
    """
    稠密系数表，数组下标即 n（下标 0 不使用，恒为 0）
    """
    N: int
    a: np.ndarray
    lam: np.ndarray
    d4: np.ndarray
    prefix_a: np.ndarray
    label: str = ""
    weight: int = 0
    fe_sign: int = 1
    genuine: bool = False

    def partial_sum(self, x: float) -> float:
        """
        S_F(x) = sum_{n <= x} a_F(n)，阶梯函数语义

        :raises: TableTooSmallError 如果 floor(x) > N
        """
        if x < 1:
            return 0.0
        n = int(math.floor(x))
        if n > self.N:
            raise TableTooSmallError(f"S_F({x}) needs n <= {n}, table holds N={self.N}",
                                     requested=n, available=self.N)
        return float(self.prefix_a[n])

    def require(self, n: int, what: str = "request"):
        if n > self.N:
            raise TableTooSmallError(f"{what} needs coefficients up to {n}, table holds N={self.N}",
                                     requested=n, available=self.N)

    @classmethod
    def from_coefficients(cls, a: np.ndarray, lam: Optional[np.ndarray] = None,
                          label: str = "custom", weight: int = 0) -> "CoeffTable":
        """
        由给定的 a[1..N] 直接构造表（用于测试和人工数据）

        :param a: 长度 N+1 的数组，a[0] 被忽略
        """
        a = np.asarray(a, dtype=np.float64).copy()
        a[0] = 0.0
        N = a.size - 1
        lam = a.copy() if lam is None else np.asarray(lam, dtype=np.float64)
        prefix = np.cumsum(a)
        return cls(N=N, a=a, lam=lam, d4=d4_table(N), prefix_a=prefix, label=label,
                   weight=weight, fe_sign=(-1) ** weight, genuine=False)


@dataclass(frozen=True)
class SignCounts:
    """N_F^+(x), N_F^-(x) 以及零带内的计数"""
    x: float
    plus: int
    minus: int
    zero: int
    zero_tolerance: float


def smallest_prime_factor(N: int) -> np.ndarray:
    """
    最小素因子表 spf[0..N]，约定 spf[0] = 0, spf[1] = 1
    """
    dtype = np.int32 if N < 2 ** 31 - 1 else np.int64
    spf = np.zeros(N + 1, dtype=dtype)
    for p in primes_up_to(math.isqrt(N)):
        seg = spf[p * p::p]
        seg[seg == 0] = p
    unset = np.flatnonzero(spf == 0)
    spf[unset] = unset
    return spf


def prime_power_blocks(N: int) -> Iterator[Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    """
    按块 [lo, 2lo) 产出 n = p^v * rest 的分解 (n, p, v, rest)，p 为 n 的最小素因子

    块内每个下标只依赖更小的下标，调用方可整块向量化赋值
    """
    spf = smallest_prime_factor(N)
    v_at = np.zeros(N + 1, dtype=np.int8)
    lo = 2
    while lo <= N:
        hi = min(2 * lo, N + 1)
        n = np.arange(lo, hi, dtype=np.int64)
        p = spf[n].astype(np.int64)
        q = n // p
        same = spf[q] == p
        v = np.where(same, v_at[q] + 1, 1).astype(np.int8)
        v_at[n] = v
        v = v.astype(np.int64)
        yield n, p, v, n // p ** v
        lo = hi


def _d4_prime_power(v: np.ndarray) -> np.ndarray:
    # d_4(p^v) = C(v+3, 3)
    return (v + 3) * (v + 2) * (v + 1) // 6


def d4_table(N: int) -> np.ndarray:
    """四元除数函数 d_4(n)，n = 0..N（d4[0] = 0）"""
    d4 = np.zeros(N + 1, dtype=np.int64)
    if N >= 1:
        d4[1] = 1
    for n, _, v, rest in prime_power_blocks(N):
        d4[n] = d4[rest] * _d4_prime_power(v)
    return d4


class CoefficientEngine:
    """
    负责构造系数表并运行表级校验
    """
    def __init__(self, zero_tol: float = None, rp_tol: float = None, segment_size: int = None):
        """
        初始化系数引擎

        :param zero_tol: 符号分类零带（相对 d_4(n)），默认使用配置
        :param rp_tol: RP 界扫描容差，默认使用配置
        :param segment_size: 流式前缀和的分段长度，默认使用配置
        """
        self.zero_tol = zero_tol if zero_tol is not None else config.ZERO_TOL
        self.rp_tol = rp_tol if rp_tol is not None else config.RP_TOL
        self.segment_size = segment_size if segment_size is not None else config.SEGMENT_SIZE
        logger.info(f"CoefficientEngine initialized. zero_tol={self.zero_tol}, rp_tol={self.rp_tol}")

    def build_table(self, F: EigenformData, N: int) -> CoeffTable:
        """
        用最小素因子筛展开 Euler 乘积，得到 n <= N 的全部系数

        :param F: 本征形式数据
        :param N: 表上界
        :return: CoeffTable
        :raises: InvalidConfigurationError 如果 N < 1
        :raises: MissingPrimeDataError 如果某个素数 <= N 没有局部数据
        """
        if N < 1:
            raise InvalidConfigurationError(f"Table bound N must be >= 1, got {N}")
        F.require_primes_up_to(N)
        logger.info(f"Building coefficient table for '{F.label}' up to N={N}")

        primes, e1s, e2s = F.arrays
        keep = primes <= N
        primes, e1s, e2s = primes[keep], e1s[keep], e2s[keep]
        root = math.isqrt(N)
        small = primes <= root
        jmax = max(1, int(math.floor(math.log2(N)))) if N >= 2 else 1
        coef_small = local_coeffs_batch(e1s[small], e2s[small], jmax)
        lam_small = local_lambda_batch(primes[small], coef_small)

        row_at = np.full(root + 1, -1, dtype=np.int64)
        row_at[primes[small]] = np.arange(int(small.sum()))

        a = np.zeros(N + 1, dtype=np.float64)
        lam = np.zeros(N + 1, dtype=np.float64)
        d4 = np.zeros(N + 1, dtype=np.int64)
        a[1] = lam[1] = 1.0
        d4[1] = 1

        for n, p, v, rest in prime_power_blocks(N):
            c_a = e1s[np.searchsorted(primes, p)]
            c_l = c_a.copy()
            multi = v >= 2
            if multi.any():
                rows = row_at[p[multi]]
                cols = v[multi]
                c_a[multi] = coef_small[rows, cols]
                c_l[multi] = lam_small[rows, cols]
            a[n] = a[rest] * c_a
            lam[n] = lam[rest] * c_l
            d4[n] = d4[rest] * _d4_prime_power(v)

        prefix = np.cumsum(a)
        logger.debug(f"Table '{F.label}' built: S_F(N)={prefix[-1]:.6g}")
        return CoeffTable(N=N, a=a, lam=lam, d4=d4, prefix_a=prefix, label=F.label,
                          weight=F.weight, fe_sign=F.fe_sign, genuine=F.genuine)

    def crosscheck_hecke(self, t: CoeffTable) -> float:
        """
        用 a_F(n) = sum_{d^2 m = n} lambda_F(m)/d 独立重算 a，返回最大相对偏差

        :return: max |a[n] - rec[n]| / (1 + |a[n]|)
        """
        N = t.N
        rec = np.zeros(N + 1, dtype=np.float64)
        for d in range(1, math.isqrt(N) + 1):
            d2 = d * d
            m = N // d2
            rec[d2::d2] += t.lam[1:m + 1] / d
        deviation = np.abs(t.a[1:] - rec[1:]) / (1.0 + np.abs(t.a[1:]))
        worst = float(deviation.max()) if deviation.size else 0.0
        logger.debug(f"Hecke crosscheck on '{t.label}': max deviation {worst:.3e}")
        return worst

    def sign_counts(self, t: CoeffTable, x: float, zero_tol: float = None) -> SignCounts:
        """
        统计 n <= x 中 a_F(n) 为正、负、落入零带的个数

        :param zero_tol: 零带相对系数，实际带宽为 zero_tol * d_4(n)
        :raises: TableTooSmallError 如果 x > N
        """
        zero_tol = zero_tol if zero_tol is not None else self.zero_tol
        if x < 1:
            raise InvalidConfigurationError(f"sign_counts needs x >= 1, got {x}")
        n = int(math.floor(x))
        t.require(n, "sign_counts")
        values = t.a[1:n + 1]
        band = zero_tol * t.d4[1:n + 1]
        plus = int(np.count_nonzero(values > band))
        minus = int(np.count_nonzero(values < -band))
        return SignCounts(x=float(x), plus=plus, minus=minus, zero=n - plus - minus,
                          zero_tolerance=zero_tol)

    def rp_violation_scan(self, t: CoeffTable, tol: float = None) -> List[int]:
        """
        列出违反 |a_F(n)| <= d_4(n) + tol 的全部 n
        """
        tol = tol if tol is not None else self.rp_tol
        bad = np.flatnonzero(np.abs(t.a[1:]) > t.d4[1:] + tol) + 1
        if bad.size:
            logger.warning(f"RP bound violated at {bad.size} indices on '{t.label}', first n={int(bad[0])}")
        return bad.tolist()

    def multiplicativity_deviation(self, t: CoeffTable, samples: int = 2000, seed: int = 0) -> Tuple[float, float, int]:
        """
        抽样检查互素 m, n 的乘性：返回 (a 的最大相对偏差, lam 的最大相对偏差, d4 的最大绝对偏差)
        """
        N = t.N
        if N < 6:
            return 0.0, 0.0, 0
        rng = np.random.default_rng(seed)
        m = rng.integers(2, math.isqrt(N) + 1, size=samples)
        n = rng.integers(2, N // m + 1)
        coprime = np.gcd(m, n) == 1
        m, n = m[coprime], n[coprime]
        if not m.size:
            return 0.0, 0.0, 0
        mn = m * n
        dev_a = np.abs(t.a[mn] - t.a[m] * t.a[n]) / (1.0 + np.abs(t.a[mn]))
        dev_l = np.abs(t.lam[mn] - t.lam[m] * t.lam[n]) / (1.0 + np.abs(t.lam[mn]))
        dev_d = np.abs(t.d4[mn] - t.d4[m] * t.d4[n])
        return float(dev_a.max()), float(dev_l.max()), int(dev_d.max())

    def d4_dirichlet_partial(self, t: CoeffTable, s: float = 2.0) -> float:
        """sum_{n <= N} d_4(n) / n^s，随 N 增大自下方趋于 zeta(s)^4"""
        n = np.arange(1, t.N + 1, dtype=np.float64)
        return float(np.sum(t.d4[1:] / n ** s))

    def mean_value_ratio(self, t: CoeffTable, exponent: float = 0.65) -> float:
        """max_{2 <= x <= N} |S_F(x)| / x^exponent，只记录不断言"""
        if t.N < 2:
            return 0.0
        x = np.arange(2, t.N + 1, dtype=np.float64)
        return float(np.max(np.abs(t.prefix_a[2:]) / x ** exponent))

    def stream_prefix_sums(self, F: EigenformData, N: int,
                           segment_size: int = None) -> Iterator[Tuple[int, int, np.ndarray, np.ndarray]]:
        """
        分段流式计算 a_F(n) 及前缀和，不构造整张表

        :return: 逐段产出 (lo, hi, a[lo..hi], S_F(lo..hi))，区间闭
        """
        if N < 1:
            raise InvalidConfigurationError(f"Table bound N must be >= 1, got {N}")
        F.require_primes_up_to(N)
        segment_size = segment_size or self.segment_size
        primes, e1s, e2s = F.arrays
        base_mask = primes <= math.isqrt(N)
        base = primes[base_mask]
        jmax = max(1, int(math.floor(math.log2(N)))) if N >= 2 else 1
        coef_small = local_coeffs_batch(e1s[base_mask], e2s[base_mask], jmax)
        logger.info(f"Streaming prefix sums for '{F.label}' up to N={N} in segments of {segment_size}")

        running = 0.0
        for lo in range(1, N + 1, segment_size):
            hi = min(lo + segment_size - 1, N)
            rem = np.arange(lo, hi + 1, dtype=np.int64)
            vals = np.ones(rem.size, dtype=np.float64)
            for row, p in enumerate(base):
                p = int(p)
                if p * p > hi:
                    break
                start = (-lo) % p
                idx = np.arange(start, rem.size, p)
                if not idx.size:
                    continue
                sub = rem[idx]
                v = np.zeros(idx.size, dtype=np.int64)
                while True:
                    divisible = sub % p == 0
                    if not divisible.any():
                        break
                    sub = np.where(divisible, sub // p, sub)
                    v += divisible
                rem[idx] = sub
                vals[idx] *= coef_small[row, v]
            # 剩余部分为 1 或大于 sqrt(hi) 的素数
            leftover = rem > 1
            if leftover.any():
                pos = np.searchsorted(primes, rem[leftover])
                vals[leftover] *= e1s[pos]
            seeded = vals.copy()
            seeded[0] += running
            prefix = np.cumsum(seeded)
            running = float(prefix[-1])
            yield lo, hi, vals, prefix
