"""
数据生成模块 - 生成可复现的合成本征形式局部数据（温和族、Saito-Kurokawa 型、平凡形式）
"""
import math
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from src.logger_config import logger
from src.exceptions.exceptions import InvalidConfigurationError
from src.satake.satake_core import (
    EigenformData,
    LocalFactor,
    local_from_spin_pairs,
    primes_up_to,
)

FAMILIES = ("tempered", "sk", "trivial")
DEFAULT_WEIGHT = 20


@dataclass(frozen=True)
class SyntheticSpec:
    """
    合成形式的描述：族名、种子、素数上界，以及 SK 族可选的逐素数角度 theta_p
    """
    family: str
    prime_bound: int
    seed: int = 0
    sk_source: Optional[Tuple[float, ...]] = None
    weight: int = DEFAULT_WEIGHT

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidConfigurationError(f"Unknown synthetic family '{self.family}', expected one of {FAMILIES}")
        if self.prime_bound < 2:
            raise InvalidConfigurationError(f"prime_bound must be >= 2, got {self.prime_bound}")

    @property
    def label(self) -> str:
        if self.family == "trivial":
            return "trivial"
        if self.family == "sk" and self.sk_source is not None:
            return "sk-angles"
        return f"{self.family}-{self.seed}"


class SyntheticFormModule:
    """
    负责按种子生成合成本征形式数据
    """
    def __init__(self, weight: int = None):
        """
        :param weight: 合成形式的权（只决定 fe_sign 元数据），默认 20
        """
        self.weight = weight if weight is not None else DEFAULT_WEIGHT
        logger.info(f"SyntheticFormModule initialized. weight={self.weight}")

    def _form(self, label: str, locals_: Dict[int, LocalFactor], prime_bound: int) -> EigenformData:
        return EigenformData(weight=self.weight, fe_sign=(-1) ** self.weight, label=label, locals=locals_,
                             prime_bound=prime_bound, genuine=False)

    def gen_tempered(self, seed: int, prime_bound: int,
                     forced: Mapping[int, Tuple[float, float]] = None) -> EigenformData:
        """
        每个素数独立取角度 a, b ~ U[0, pi]，自旋参数 {e^{+-ia}, e^{+-ib}}：
        e1 = 2cos a + 2cos b, e2 = 2 + 4 cos a cos b

        :param seed: 随机种子
        :param prime_bound: 素数上界
        :param forced: 指定某些素数的角度 (a, b)
        """
        if prime_bound < 2:
            raise InvalidConfigurationError(f"prime_bound must be >= 2, got {prime_bound}")
        primes = primes_up_to(prime_bound)
        rng = np.random.default_rng(seed)
        angles = rng.uniform(0.0, math.pi, size=(primes.size, 2))
        forced = forced or {}
        locals_ = {}
        for (a, b), p in zip(angles, primes):
            p = int(p)
            a, b = forced.get(p, (a, b))
            locals_[p] = local_from_spin_pairs(p, 2.0 * math.cos(a), 2.0 * math.cos(b))
        logger.debug(f"Generated tempered form seed={seed} with {primes.size} primes")
        return self._form(f"tempered-{seed}", locals_, prime_bound)

    def gen_sk(self, prime_bound: int, seed: int = None,
               angles: Union[Sequence[float], Mapping[int, float]] = None) -> EigenformData:
        """
        Saito-Kurokawa 型局部数据，自旋参数 {sqrt(p), 1/sqrt(p), e^{+-i theta_p}}：
        e1 = sqrt(p) + 1/sqrt(p) + 2cos theta_p, e2 = 2 + (sqrt(p) + 1/sqrt(p)) 2cos theta_p

        :param prime_bound: 素数上界
        :param seed: 随机角度的种子（angles 为 None 时使用）
        :param angles: 按素数升序的角度序列，或 p -> theta_p 的映射
        """
        if prime_bound < 2:
            raise InvalidConfigurationError(f"prime_bound must be >= 2, got {prime_bound}")
        primes = primes_up_to(prime_bound)
        if angles is None:
            rng = np.random.default_rng(seed if seed is not None else 0)
            thetas = rng.uniform(0.0, math.pi, size=primes.size)
            label = f"sk-{seed if seed is not None else 0}"
        elif isinstance(angles, Mapping):
            missing = [int(p) for p in primes if int(p) not in angles]
            if missing:
                raise InvalidConfigurationError(f"No Satake angle for prime {missing[0]}")
            thetas = np.array([angles[int(p)] for p in primes], dtype=np.float64)
            label = "sk-angles"
        else:
            thetas = np.asarray(angles, dtype=np.float64)
            if thetas.size < primes.size:
                raise InvalidConfigurationError(
                    f"{thetas.size} angles given for {primes.size} primes up to {prime_bound}")
            thetas = thetas[:primes.size]
            label = "sk-angles"
        if np.any((thetas < 0) | (thetas > math.pi)):
            raise InvalidConfigurationError("Satake angles must lie in [0, pi]")

        locals_ = {}
        for theta, p in zip(thetas, primes):
            p = int(p)
            root = math.sqrt(p)
            locals_[p] = local_from_spin_pairs(p, root + 1.0 / root, 2.0 * math.cos(theta))
        logger.debug(f"Generated SK-type form '{label}' with {primes.size} primes")
        return self._form(label, locals_, prime_bound)

    def gen_trivial(self, prime_bound: int) -> EigenformData:
        """每个局部因子都是 (1 - t)^4，即 e1 = 4, e2 = 6，系数为 d_4(n)"""
        if prime_bound < 2:
            raise InvalidConfigurationError(f"prime_bound must be >= 2, got {prime_bound}")
        locals_ = {int(p): LocalFactor(int(p), 4, 6) for p in primes_up_to(prime_bound)}
        return self._form("trivial", locals_, prime_bound)

    def generate(self, spec: SyntheticSpec) -> EigenformData:
        """按 SyntheticSpec 分派到对应的生成器"""
        module = self if spec.weight == self.weight else SyntheticFormModule(weight=spec.weight)
        if spec.family == "tempered":
            return module.gen_tempered(spec.seed, spec.prime_bound)
        if spec.family == "sk":
            return module.gen_sk(spec.prime_bound, seed=spec.seed, angles=spec.sk_source)
        return module.gen_trivial(spec.prime_bound)
