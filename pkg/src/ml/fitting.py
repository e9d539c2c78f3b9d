"""
拟合模块 - 用最小二乘回归估计误差指数与包络常数
"""
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.linear_model import LinearRegression

from src.logger_config import logger
from src.exceptions.exceptions import InsufficientDataError

MIN_FIT_POINTS = 4


@dataclass(frozen=True)
class ExponentFit:
    """log|y| 对 log x 的最小二乘拟合结果"""
    slope: float
    stderr: float
    r2: float
    n_points: int


@dataclass(frozen=True)
class EnvelopeFit:
    """
    |value| <= constant * envelope 的上确界常数，以及双对数回归的 R^2
    """
    constant: float
    r2: float
    n_points: int


def _usable(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    return np.isfinite(xs) & np.isfinite(ys) & (xs > 0) & (ys != 0)


def _loglog_regression(xs: np.ndarray, ys: np.ndarray):
    X = np.log(xs).reshape(-1, 1)
    y = np.log(np.abs(ys))
    model = LinearRegression()
    model.fit(X, y)
    return model, X, y


def fit_exponent(xs: Sequence[float], values: Sequence[float]) -> ExponentFit:
    """
    拟合 log|values| = slope * log xs + b

    零值和非有限值被剔除

    :param xs: 自变量（> 0）
    :param values: 因变量，例如 Voronoi 残差
    :return: ExponentFit(slope, stderr, r2, n_points)
    :raises: InsufficientDataError 如果可用点少于 4 个
    """
    xs = np.asarray(xs, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    keep = _usable(xs, values)
    n = int(keep.sum())
    if n < MIN_FIT_POINTS:
        raise InsufficientDataError(f"Exponent fit needs at least {MIN_FIT_POINTS} usable points, got {n}")

    model, X, y = _loglog_regression(xs[keep], values[keep])
    slope = float(model.coef_[0])
    residuals = y - model.predict(X)
    spread = float(np.sum((X[:, 0] - X[:, 0].mean()) ** 2))
    if spread > 0:
        stderr = math.sqrt(float(np.sum(residuals ** 2)) / (n - 2) / spread)
    else:
        stderr = math.inf
    r2 = float(model.score(X, y))
    logger.debug(f"Exponent fit on {n} points: slope={slope:.4f} +/- {stderr:.4f}, R2={r2:.4f}")
    return ExponentFit(slope=slope, stderr=stderr, r2=r2, n_points=n)


def fit_envelope(values: Sequence[float], envelopes: Sequence[float]) -> EnvelopeFit:
    """
    求最小常数 A 使 |values| <= A * envelopes 对全部点成立，并给出 log|values| 对 log envelopes 的 R^2

    :raises: InsufficientDataError 如果可用点少于 4 个
    """
    values = np.asarray(values, dtype=np.float64)
    envelopes = np.asarray(envelopes, dtype=np.float64)
    keep = _usable(envelopes, values)
    n = int(keep.sum())
    if n < MIN_FIT_POINTS:
        raise InsufficientDataError(f"Envelope fit needs at least {MIN_FIT_POINTS} usable points, got {n}")
    constant = float(np.max(np.abs(values[keep]) / envelopes[keep]))
    model, X, y = _loglog_regression(envelopes[keep], values[keep])
    r2 = float(model.score(X, y))
    logger.debug(f"Envelope fit on {n} points: A={constant:.4g}, R2={r2:.4f}")
    return EnvelopeFit(constant=constant, r2=r2, n_points=n)
