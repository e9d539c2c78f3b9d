"""
符号检测模块 - Fejér 型核 K_tau、检测积分 J_tau、极值定位与短区间符号计数
"""
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from src.logger_config import logger
from src.config import config
from src.exceptions.exceptions import (
    InvalidConfigurationError,
    QuadratureAccuracyError,
    TableTooSmallError,
)
from src.coeffs.coeff_engine import CoeffTable

TWO_PI = 2.0 * math.pi
GAUSS_NODES, GAUSS_WEIGHTS = leggauss(8)
# 每块积分的子区间数
PIECE_CHUNK = 1 << 16


@dataclass(frozen=True)
class KernelTest:
    """一次 J_tau 计算的结果，expected = tau/2"""
    t: float
    kappa: float
    tau: int
    J: float
    expected: float
    deviation: float


@dataclass(frozen=True)
class ExtremaReport:
    """
    窗口 [X, X + C X^{3/4}] 内 S_F 的最大点 x1 与最小点 x2
    """
    X: float
    C: float
    x1: float
    x2: float
    S1: float
    S2: float
    c1_emp: float
    c2_emp: float
    lemma_holds: bool


@dataclass(frozen=True)
class WindowScan:
    """窗口 (x, x + c x^{3/4}] 内的正负系数计数"""
    x: float
    c: float
    plus: int
    minus: int
    zero: int
    lower_target: float

    @property
    def window(self) -> Tuple[float, float]:
        return self.x, self.x + self.c * self.x ** 0.75


@dataclass(frozen=True)
class AlternatingTriple:
    """x < x1 < x2 < x3 且 S(x1), S(x3) 与 S(x2) 异号"""
    x1: int
    x2: int
    x3: int
    S1: float
    S2: float
    S3: float
    pattern: str


@dataclass(frozen=True)
class KernelMassBracket:
    kappa: float
    mass_plus: float
    mass_minus: float
    provable_lower: float
    stated_lower: float
    upper: float
    stated_bracket_holds: bool


def _phase_constant(c_osc: Optional[float]) -> float:
    return c_osc if c_osc is not None else config.PHASE_CONSTANT


def kernel(u, kappa: float, tau: int, c_osc: float = None):
    """
    K_tau(u) = (1 - |u|)(1 + tau cos(c_osc kappa u))

    :param u: 标量或数组，取值于 [-1, 1]
    :raises: ValueError 如果 |u| > 1
    """
    c = _phase_constant(c_osc)
    u_arr = np.asarray(u, dtype=np.float64)
    if np.any(np.abs(u_arr) > 1):
        raise ValueError("kernel is defined on -1 <= u <= 1")
    value = (1.0 - np.abs(u_arr)) * (1.0 + tau * np.cos(c * kappa * u_arr))
    return float(value) if value.ndim == 0 else value


def kernel_mass(kappa: float, tau: int, c_osc: float = None) -> float:
    """int_{-1}^{1} K_tau = 1 + tau (sin(w/2) / (w/2))^2，w = c_osc kappa"""
    half = _phase_constant(c_osc) * kappa / 2.0
    return 1.0 + tau * (math.sin(half) / half) ** 2


def kernel_mass_bracket(kappa: float, c_osc: float = None) -> KernelMassBracket:
    """
    核质量的上下界：可证下界 1 - (2/(c kappa))^2 与文献中给出的下界 1 - (3 pi kappa)^{-2}
    """
    c = _phase_constant(c_osc)
    plus = kernel_mass(kappa, 1, c)
    minus = kernel_mass(kappa, -1, c)
    stated = 1.0 - (3.0 * math.pi * kappa) ** -2
    return KernelMassBracket(kappa=kappa, mass_plus=plus, mass_minus=minus,
                             provable_lower=1.0 - (2.0 / (c * kappa)) ** 2, stated_lower=stated, upper=2.0,
                             stated_bracket_holds=bool(min(plus, minus) >= stated and max(plus, minus) <= 2.0))


def phase_aligned_t(t: float, c_osc: float = None) -> float:
    """最大的 t' <= t 使 c_osc t' + pi/4 为 2 pi 的整数倍"""
    c = _phase_constant(c_osc)
    m = math.floor((c * t + math.pi / 4) / TWO_PI)
    return (TWO_PI * m - math.pi / 4) / c


def _gauss_pieces(breaks: np.ndarray, integrand: Callable[[np.ndarray], np.ndarray]) -> float:
    # 对每个子区间做 8 点 Gauss-Legendre，分块累加
    parts = []
    for start in range(0, breaks.size - 1, PIECE_CHUNK):
        lo = breaks[start:start + PIECE_CHUNK]
        hi = breaks[start + 1:start + PIECE_CHUNK + 1]
        lo = lo[:hi.size]
        half = (hi - lo) / 2.0
        mid = (hi + lo) / 2.0
        nodes = mid[:, None] + half[:, None] * GAUSS_NODES[None, :]
        values = integrand(nodes)
        parts.append(float(np.sum((values * GAUSS_WEIGHTS[None, :]).sum(axis=1) * half)))
    return math.fsum(parts)


class SignDetector:
    """
    Fejér 型核检测器与短区间符号扫描
    """
    def __init__(self, kappa: float = None, n_quad: int = None, eps: float = None, window_c: float = None,
                 zero_tol: float = None, piece_budget: int = None, c_osc: float = None):
        """
        :param kappa: 核频率尺度，默认 12
        :param n_quad: [-1, 1] 上均匀网格的格数（>= 1000）
        :param eps: 下界目标 x^{3/8 - eps} 的 eps
        :param window_c: 极值窗口系数 C
        :param zero_tol: 符号零带（相对 d_4(n)）
        :param piece_budget: 积分子区间数上限
        :param c_osc: 振荡常数
        """
        self.kappa = kappa if kappa is not None else config.KERNEL_KAPPA
        self.n_quad = n_quad if n_quad is not None else config.N_QUAD
        self.eps = eps if eps is not None else config.SIGN_EPS
        self.window_c = window_c if window_c is not None else config.WINDOW_C
        self.zero_tol = zero_tol if zero_tol is not None else config.ZERO_TOL
        self.piece_budget = piece_budget if piece_budget is not None else config.QUAD_PIECE_BUDGET
        self.c_osc = _phase_constant(c_osc)
        logger.info(f"SignDetector initialized. kappa={self.kappa}, n_quad={self.n_quad}, eps={self.eps}, "
                    f"C={self.window_c}")

    def phi_values(self, t_table: CoeffTable, v: np.ndarray) -> np.ndarray:
        """向量化的 Phi(v)，v <= 0 或 v^4 < 1 处为 0"""
        v = np.asarray(v, dtype=np.float64)
        n = np.floor(np.where(v > 0, v, 0.0) ** 4).astype(np.int64)
        top = int(n.max()) if n.size else 0
        if top > t_table.N:
            raise TableTooSmallError(f"Phi needs S_F up to {top}, table holds N={t_table.N}",
                                     requested=top, available=t_table.N)
        out = np.zeros(v.shape, dtype=np.float64)
        positive = n >= 1
        out[positive] = TWO_PI ** 0.75 * t_table.prefix_a[n[positive]] / v[positive] ** 1.5
        return out

    def phi(self, t_table: CoeffTable, v: float) -> float:
        """
        Phi(v) = (2 pi)^{3/4} S_F(floor(v^4)) / v^{3/2}

        :raises: TableTooSmallError 如果 v^4 > N
        """
        if not v > 0:
            raise InvalidConfigurationError(f"Phi needs v > 0, got {v}")
        return float(self.phi_values(t_table, np.array([v]))[0])

    def _breaks(self, t: float, kappa: float, n_quad: int, with_jumps: bool) -> np.ndarray:
        grid = np.linspace(-1.0, 1.0, n_quad + 1)
        pieces = [grid, np.array([0.0])]
        if with_jumps:
            first = int(math.floor((t - kappa) ** 4)) + 1
            last = int(math.ceil((t + kappa) ** 4)) - 1
            count = max(0, last - first + 1)
            if count + n_quad > self.piece_budget:
                raise QuadratureAccuracyError(
                    f"J_tau needs {count + n_quad} pieces, budget is {self.piece_budget}",
                    diagnostics={"t": t, "kappa": kappa, "jumps": count, "budget": self.piece_budget})
            if count:
                n = np.arange(first, last + 1, dtype=np.float64)
                jumps = (n ** 0.25 - t) / kappa
                pieces.append(jumps[(jumps > -1.0) & (jumps < 1.0)])
        return np.unique(np.concatenate(pieces))

    def j_tau(self, t_table: Optional[CoeffTable], t: float, kappa: float = None, tau: int = 1,
              n_quad: int = None, phi_fn: Callable[[np.ndarray], np.ndarray] = None) -> KernelTest:
        """
        J_tau = int_{-1}^{1} Phi(t + kappa u) K_tau(u) du

        在 Phi 的每个跳跃点 u_n = (n^{1/4} - t)/kappa 以及 u = 0 处切分，
        再叠加 n_quad 格均匀网格，每段 8 点 Gauss-Legendre。

        :param phi_fn: 替代 Phi 的函数（自检用），此时不需要系数表，也不切分跳跃点
        :raises: InvalidConfigurationError 如果 t <= 2 kappa、kappa <= 1 或 n_quad < 1000
        :raises: TableTooSmallError 如果 (t + kappa)^4 > N
        :raises: QuadratureAccuracyError 如果子区间数超出预算
        """
        kappa = kappa if kappa is not None else self.kappa
        n_quad = n_quad if n_quad is not None else self.n_quad
        if tau not in (1, -1):
            raise InvalidConfigurationError(f"tau must be +1 or -1, got {tau}")
        if not kappa > 1:
            raise InvalidConfigurationError(f"kappa must exceed 1, got {kappa}")
        if not t > 2 * kappa:
            raise InvalidConfigurationError(f"J_tau needs t > 2*kappa, got t={t}, kappa={kappa}")
        if n_quad < 1000:
            raise InvalidConfigurationError(f"n_quad must be >= 1000, got {n_quad}")
        with_jumps = phi_fn is None
        if with_jumps:
            if t_table is None:
                raise InvalidConfigurationError("J_tau needs a coefficient table or phi_fn")
            top = int(math.floor((t + kappa) ** 4))
            t_table.require(top, "J_tau")

            def phi_fn(v):
                return self.phi_values(t_table, v)

        breaks = self._breaks(t, kappa, n_quad, with_jumps=with_jumps)
        c = self.c_osc

        def integrand(u):
            return phi_fn(t + kappa * u) * (1.0 - np.abs(u)) * (1.0 + tau * np.cos(c * kappa * u))

        J = _gauss_pieces(breaks, integrand)
        logger.debug(f"J_tau(t={t}, kappa={kappa}, tau={tau}) = {J:.8g} over {breaks.size - 1} pieces")
        return KernelTest(t=float(t), kappa=float(kappa), tau=int(tau), J=J, expected=tau / 2.0,
                          deviation=J - tau / 2.0)

    def find_extrema(self, t_table: CoeffTable, X: float, C: float = None) -> ExtremaReport:
        """
        扫描窗口 [X, X + C X^{3/4}] 内 S_F 的全部跳跃点，取最大点与最小点

        :raises: TableTooSmallError 如果窗口超出表范围
        """
        C = C if C is not None else self.window_c
        if not X >= 1 or C < 0:
            raise InvalidConfigurationError(f"find_extrema needs X >= 1 and C >= 0, got X={X}, C={C}")
        end = X + C * X ** 0.75
        lo = int(math.floor(X))
        hi = int(math.floor(end))
        t_table.require(hi, "find_extrema")
        points = np.concatenate(([float(X)], np.arange(lo + 1, hi + 1, dtype=np.float64)))
        values = t_table.prefix_a[np.concatenate(([lo], np.arange(lo + 1, hi + 1)))]
        i1 = int(np.argmax(values))
        i2 = int(np.argmin(values))
        S1, S2 = float(values[i1]), float(values[i2])
        scale = X ** 0.375
        report = ExtremaReport(X=float(X), C=float(C), x1=float(points[i1]), x2=float(points[i2]), S1=S1, S2=S2,
                               c1_emp=S1 / scale, c2_emp=-S2 / scale, lemma_holds=bool(S1 > 0 > S2))
        if not report.lemma_holds:
            logger.debug(f"Extrema window at X={X} has no sign change of S_F (S1={S1:.6g}, S2={S2:.6g})")
        return report

    def scan_window(self, t_table: CoeffTable, x: float, c: float = None, eps: float = None,
                    zero_tol: float = None) -> WindowScan:
        """
        统计 n in (x, x + c x^{3/4}] 中 a(n) 超出零带 zero_tol * d_4(n) 的正负个数

        :raises: TableTooSmallError 如果窗口超出表范围
        """
        c = c if c is not None else self.window_c
        eps = eps if eps is not None else self.eps
        zero_tol = zero_tol if zero_tol is not None else self.zero_tol
        if not x >= 1 or c < 0:
            raise InvalidConfigurationError(f"scan_window needs x >= 1 and c >= 0, got x={x}, c={c}")
        lo = int(math.floor(x))
        hi = int(math.floor(x + c * x ** 0.75))
        t_table.require(hi, "scan_window")
        values = t_table.a[lo + 1:hi + 1]
        band = zero_tol * t_table.d4[lo + 1:hi + 1]
        plus = int(np.count_nonzero(values > band))
        minus = int(np.count_nonzero(values < -band))
        return WindowScan(x=float(x), c=float(c), plus=plus, minus=minus, zero=int(values.size) - plus - minus,
                          lower_target=x ** (0.375 - eps))

    @staticmethod
    def signed_mass(t_table: CoeffTable, lo: float, hi: float) -> Tuple[float, float]:
        """
        lo < n <= hi 上正系数之和与负系数之和

        :return: (sum a(n) > 0 部分, sum a(n) < 0 部分)
        """
        a_lo = int(math.floor(lo))
        a_hi = int(math.floor(hi))
        t_table.require(a_hi, "signed_mass")
        values = t_table.a[a_lo + 1:a_hi + 1]
        return math.fsum(values[values > 0].tolist()), math.fsum(values[values < 0].tolist())

    def alternating_triple(self, t_table: CoeffTable, x: float, C: float = None) -> Optional[AlternatingTriple]:
        """
        在 [x, x + 3C x^{3/4}] 中寻找 x < x1 < x2 < x3，S(x1), S(x3) 与 S(x2) 符号相反

        :return: 最早完成的三元组，找不到时返回 None
        """
        C = C if C is not None else self.window_c
        lo = int(math.floor(x))
        hi = int(math.floor(x + 3 * C * x ** 0.75))
        t_table.require(hi, "alternating_triple")
        n = np.arange(lo + 1, hi + 1)
        S = t_table.prefix_a[lo + 1:hi + 1]
        best = None
        for pattern, outer in (("-+-", S < 0), ("+-+", S > 0)):
            inner = S > 0 if pattern == "-+-" else S < 0
            i1 = np.flatnonzero(outer)
            if not i1.size:
                continue
            i2 = np.flatnonzero(inner[i1[0] + 1:])
            if not i2.size:
                continue
            j2 = i1[0] + 1 + i2[0]
            i3 = np.flatnonzero(outer[j2 + 1:])
            if not i3.size:
                continue
            j3 = j2 + 1 + i3[0]
            if best is None or n[j3] < best.x3:
                best = AlternatingTriple(x1=int(n[i1[0]]), x2=int(n[j2]), x3=int(n[j3]), S1=float(S[i1[0]]),
                                         S2=float(S[j2]), S3=float(S[j3]), pattern=pattern)
        return best

    def r_s_beta(self, beta: float, t: float, kappa: float = None, tau: int = 1,
                 n_quad: int = None) -> Tuple[float, float]:
        """
        r_beta = int K_tau(u) cos(c beta (t + kappa u) + pi/4) du
        s_beta = int K_tau(u) sin(c beta (t + kappa u) + pi/4) / (t + kappa u) du

        :raises: InvalidConfigurationError 如果 beta <= 0 或 t <= 2 kappa
        """
        kappa = kappa if kappa is not None else self.kappa
        n_quad = n_quad if n_quad is not None else self.n_quad
        if not beta > 0:
            raise InvalidConfigurationError(f"beta must be positive, got {beta}")
        if not t > 2 * kappa:
            raise InvalidConfigurationError(f"r_s_beta needs t > 2*kappa, got t={t}, kappa={kappa}")
        c = self.c_osc
        # 每个振荡周期至少 4 格
        cells = max(n_quad, int(math.ceil(2.0 * c * (beta + 1.0) * kappa)))
        if cells > self.piece_budget:
            raise QuadratureAccuracyError(f"r_s_beta needs {cells} pieces, budget is {self.piece_budget}",
                                          diagnostics={"beta": beta, "t": t, "kappa": kappa})
        breaks = np.unique(np.concatenate((np.linspace(-1.0, 1.0, cells + 1), [0.0])))

        def weight(u):
            return (1.0 - np.abs(u)) * (1.0 + tau * np.cos(c * kappa * u))

        def r_integrand(u):
            return weight(u) * np.cos(c * beta * (t + kappa * u) + math.pi / 4)

        def s_integrand(u):
            v = t + kappa * u
            return weight(u) * np.sin(c * beta * v + math.pi / 4) / v

        return _gauss_pieces(breaks, r_integrand), _gauss_pieces(breaks, s_integrand)
