"""
Voronoi 评估模块 - 截断 Voronoi 主项、精确部分和、Perron 积分对照与误差指数拟合
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from src.logger_config import logger
from src.config import config
from src.exceptions.exceptions import (
    InsufficientDataError,
    InvalidConfigurationError,
    QuadratureAccuracyError,
    TableTooSmallError,
)
from src.coeffs.coeff_engine import CoeffTable
from src.ml.fitting import ExponentFit, fit_exponent
from src.satake.satake_core import EigenformData

TWO_PI = 2.0 * math.pi
MIN_GRID_POINTS = 8
# 单块最多处理的 (t 节点 x 素数) 数
PERRON_CHUNK_CELLS = 1 << 21


@dataclass(frozen=True)
class VoronoiEvaluation:
    """
    一个 x 点上的精确部分和与截断主项
    """
    x: float
    M: int
    T: float
    exact: float
    main_term: float
    residual: float


@dataclass(frozen=True)
class PerronConfig:
    """
    Perron 积分参数：横坐标 kappa、高度 T、Euler 乘积截断 P、积分步长（None 时按相位准则选取）
    """
    T: float
    P: int
    kappa: float = None
    step: Optional[float] = None

    def __post_init__(self):
        if self.kappa is None:
            object.__setattr__(self, "kappa", config.PERRON_KAPPA)
        if not self.kappa > 1:
            raise InvalidConfigurationError(f"Perron abscissa must exceed 1, got {self.kappa}")
        if not self.T > 0:
            raise InvalidConfigurationError(f"Perron height T must be positive, got {self.T}")
        if self.P < 2:
            raise InvalidConfigurationError(f"Euler product cutoff P must be >= 2, got {self.P}")
        if self.step is not None and not self.step > 0:
            raise InvalidConfigurationError(f"Quadrature step must be positive, got {self.step}")


@dataclass(frozen=True)
class PerronComparison:
    """Perron 积分值与直接前缀和的对照行"""
    x: float
    T: float
    P: int
    kappa: float
    oracle: float
    direct: float
    deviation: float


def truncation_height(x: float, M: int) -> float:
    """T = (4 pi^2 (M + 1/2) x)^{1/4}"""
    return (4.0 * math.pi ** 2 * (M + 0.5) * x) ** 0.25


class VoronoiEvaluator:
    """
    截断 Voronoi 公式两侧的求值器
    """
    def __init__(self, phase_constant: float = None, phase_step: float = None, threads: int = None):
        """
        :param phase_constant: 振荡常数 c_osc，默认 4*sqrt(2*pi)
        :param phase_step: Perron 积分每步允许的最大相位增量，默认 pi/8
        :param threads: 网格求值的线程数
        """
        self.phase_constant = phase_constant if phase_constant is not None else config.PHASE_CONSTANT
        self.phase_step = phase_step if phase_step is not None else config.PERRON_PHASE_STEP
        self.threads = threads if threads is not None else config.THREADS
        logger.info(f"VoronoiEvaluator initialized. c_osc={self.phase_constant:.12g}, threads={self.threads}")

    def main_term(self, t: CoeffTable, x: float, M: int, apply_fe_sign: bool = False,
                  descending: bool = False) -> float:
        """
        B_M(x) = x^{3/8} (2 pi)^{-3/4} sum_{n <= M} a(n) n^{-5/8} cos(c_osc (n x)^{1/4} + pi/4)

        :param apply_fe_sign: 为 True 时乘以函数方程符号 (-1)^k
        :param descending: 按 n 降序求和（用于求和顺序一致性检查）
        :raises: TableTooSmallError 如果 M > N
        """
        if M < 0:
            raise InvalidConfigurationError(f"M must be >= 0, got {M}")
        if not x > 0:
            raise InvalidConfigurationError(f"main_term needs x > 0, got {x}")
        if M > t.N:
            raise TableTooSmallError(f"main_term with M={M} exceeds table N={t.N}", requested=M, available=t.N)
        if M == 0:
            return 0.0
        n = np.arange(1, M + 1, dtype=np.float64)
        terms = t.a[1:M + 1] * n ** -0.625 * np.cos(self.phase_constant * (n * x) ** 0.25 + math.pi / 4)
        if descending:
            terms = terms[::-1]
        total = math.fsum(terms.tolist())
        value = x ** 0.375 * TWO_PI ** -0.75 * total
        if apply_fe_sign:
            value *= t.fe_sign
        return value

    def evaluate(self, t: CoeffTable, x: float, M: int, apply_fe_sign: bool = False) -> VoronoiEvaluation:
        """
        精确部分和 S_F(x)（floor 语义）与主项 B_M(x) 的对照

        :raises: TableTooSmallError 如果 x 或 M 超出表范围
        """
        exact = t.partial_sum(x)
        main = self.main_term(t, x, M, apply_fe_sign=apply_fe_sign)
        return VoronoiEvaluation(x=float(x), M=int(M), T=truncation_height(x, M), exact=exact,
                                 main_term=main, residual=exact - main)

    def evaluate_grid(self, t: CoeffTable, xs: Sequence[float], M_rule: Callable[[float], int],
                      apply_fe_sign: bool = False) -> List[VoronoiEvaluation]:
        """按 xs 顺序返回评估结果，线程数由 threads 决定"""
        def one(x):
            return self.evaluate(t, x, M_rule(x), apply_fe_sign=apply_fe_sign)

        if self.threads > 1 and len(xs) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(one, xs))
        return [one(x) for x in xs]

    def error_exponent_fit(self, t: CoeffTable, xs: Sequence[float], M_rule: Callable[[float], int],
                           apply_fe_sign: bool = False) -> Tuple[ExponentFit, List[VoronoiEvaluation]]:
        """
        对 log|残差| 关于 log x 做最小二乘，残差为零的点被剔除

        :return: (ExponentFit, 各点的 VoronoiEvaluation)
        :raises: InsufficientDataError 如果网格少于 8 点或可用点少于 4 个
        """
        if len(xs) < MIN_GRID_POINTS:
            raise InsufficientDataError(f"Exponent fit needs a grid of at least {MIN_GRID_POINTS} x values, "
                                        f"got {len(xs)}")
        evaluations = self.evaluate_grid(t, xs, M_rule, apply_fe_sign=apply_fe_sign)
        fit = fit_exponent([e.x for e in evaluations], [e.residual for e in evaluations])
        logger.info(f"Residual exponent on '{t.label}': {fit.slope:.4f} +/- {fit.stderr:.4f} (R2={fit.r2:.3f})")
        return fit, evaluations

    def perron_oracle(self, F: EigenformData, x: float, cfg: PerronConfig) -> float:
        """
        (1/2pi) * int_{-T}^{T} Z^{(P)}(kappa+it) x^{kappa+it} / (kappa+it) dt 的实部

        Z^{(P)} 为截断到 p <= P 的 Euler 乘积。利用共轭对称只积分 [0, T]，
        中点法步长使被积函数相位每步增量不超过 phase_step。

        :raises: InvalidConfigurationError 如果 x 是整数或 x <= 1
        :raises: MissingPrimeDataError 如果缺少 p <= P 的数据
        :raises: QuadratureAccuracyError 如果奇偶子网格的估计误差超过结果的 10%
        """
        if not x > 1 or float(x).is_integer():
            raise InvalidConfigurationError(f"perron_oracle needs a non-integer x > 1, got {x}")
        F.require_primes_up_to(cfg.P)
        primes, e1s, e2s = F.arrays
        sel = primes <= cfg.P
        logp = np.log(primes[sel].astype(np.float64))
        e1s, e2s = e1s[sel], e2s[sel]

        log_x = math.log(x)
        step = cfg.step or self.phase_step / (log_x + 4.0 * math.log(cfg.P))
        n_nodes = max(2, math.ceil(cfg.T / step))
        n_nodes += n_nodes % 2
        h = cfg.T / n_nodes
        chunk = max(1, PERRON_CHUNK_CELLS // max(1, logp.size))
        logger.debug(f"Perron oracle x={x}, T={cfg.T}, P={cfg.P}: {n_nodes} nodes, step {h:.3e}")

        even_parts, odd_parts = [], []
        for start in range(0, n_nodes, chunk):
            j = np.arange(start, min(start + chunk, n_nodes))
            s = cfg.kappa + 1j * (j + 0.5) * h
            z = np.exp(-np.outer(s, logp))
            z2 = z * z
            local = 1.0 - e1s * z + e2s * z2 - e1s * z2 * z + z2 * z2
            values = (np.exp(s * log_x) / s / np.prod(local, axis=1)).real
            even = (j % 2) == 0
            even_parts.append(float(values[even].sum()))
            odd_parts.append(float(values[~even].sum()))

        integral_even = 2.0 * h * math.fsum(even_parts)
        integral_odd = 2.0 * h * math.fsum(odd_parts)
        value = (integral_even + integral_odd) / 2.0 / math.pi
        error = abs(integral_even - integral_odd) / 2.0 / math.pi
        if error > 0.1 * max(abs(value), 1.0):
            diagnostics = {"x": x, "T": cfg.T, "P": cfg.P, "kappa": cfg.kappa, "nodes": n_nodes,
                           "step": h, "value": value, "error_estimate": error}
            logger.error(f"Perron quadrature too coarse: {diagnostics}")
            raise QuadratureAccuracyError(f"Perron quadrature error estimate {error:.3e} exceeds 10% of {value:.6g}",
                                          diagnostics=diagnostics)
        return value

    def perron_compare(self, F: EigenformData, t: CoeffTable, x: float, cfg: PerronConfig) -> PerronComparison:
        """Perron 积分与 prefix_a[floor(x)] 的偏差"""
        oracle = self.perron_oracle(F, x, cfg)
        direct = t.partial_sum(x)
        return PerronComparison(x=float(x), T=float(cfg.T), P=int(cfg.P), kappa=float(cfg.kappa),
                                oracle=oracle, direct=direct, deviation=abs(oracle - direct))

    @staticmethod
    def perron_envelope(x: float, T: float, kappa: float, t: CoeffTable) -> float:
        """
        截断误差包络 x^kappa / (pi T min_n |log(x/n)|) * sum_{n <= 2x} |a(n)| n^{-kappa}

        :raises: TableTooSmallError 如果表不覆盖 2x
        """
        top = int(math.floor(2 * x))
        t.require(top, "perron_envelope")
        n = np.arange(1, top + 1, dtype=np.float64)
        gap = float(np.min(np.abs(np.log(x / n))))
        if gap == 0:
            return math.inf
        weight = math.fsum((np.abs(t.a[1:top + 1]) * n ** -kappa).tolist())
        return x ** kappa / (math.pi * T * gap) * weight

    @staticmethod
    def i0_leading(tval: float, k: int) -> float:
        """(-1)^k (2 pi)^{-1/2} t^{3/8} cos(4 t^{1/4} + pi/4)"""
        if not tval > 0:
            raise InvalidConfigurationError(f"i0_leading needs t > 0, got {tval}")
        return (-1) ** k * TWO_PI ** -0.5 * tval ** 0.375 * math.cos(4.0 * tval ** 0.25 + math.pi / 4)

    @classmethod
    def i0_two_term(cls, tval: float, k: int, e1: float = 0.0) -> float:
        """主项加上二阶项 (-1)^k e1 t^{1/8} cos(4 t^{1/4} + 3pi/4)，e1 由调用方给出"""
        second = (-1) ** k * e1 * tval ** 0.125 * math.cos(4.0 * tval ** 0.25 + 3 * math.pi / 4)
        return cls.i0_leading(tval, k) + second
