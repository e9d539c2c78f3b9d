"""
性质检查模块 - 汇总各模块的不变量检查，失败时记录告警并报告模块与不变量名称
"""
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np

from src.logger_config import logger
from src.config import config
from src.exceptions.exceptions import SpinorZetaError
from src.satake.satake_core import (
    EigenformData,
    LocalFactor,
    hecke_to_local,
    is_tempered,
    local_coeffs,
    local_lambda,
    spin_roots,
)
from src.coeffs.coeff_engine import CoeffTable, CoefficientEngine
from src.voronoi.voronoi_eval import VoronoiEvaluator, truncation_height
from src.detector.sign_detector import SignDetector, kernel, kernel_mass

# 局部因子检查最多覆盖的素数个数
LOCAL_SAMPLE = 200
ORACLE_LIMIT = 10_000


@dataclass(frozen=True)
class PropertyResult:
    """一条不变量检查结果"""
    module: str
    invariant: str
    passed: bool
    detail: str


def _naive_coefficient(F: EigenformData, n: int, which: str) -> float:
    # 试除分解后逐素数幂相乘，不经过筛法
    value = 1.0
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            v = 0
            while m % p == 0:
                m //= p
                v += 1
            seq = local_coeffs(F.locals[p], v) if which == "a" else local_lambda(F.locals[p], v)
            value *= float(seq[v])
        p += 1
    if m > 1:
        seq = local_coeffs(F.locals[m], 1) if which == "a" else local_lambda(F.locals[m], 1)
        value *= float(seq[1])
    return value


class PropertySuite:
    """
    负责运行不变量检查并在失败时告警
    """
    def __init__(self, tempered_tol: float = None, rp_tol: float = None, engine: CoefficientEngine = None,
                 evaluator: VoronoiEvaluator = None, detector: SignDetector = None):
        """
        :param tempered_tol: 温和性容差，默认使用配置
        :param rp_tol: RP 界容差，默认使用配置
        """
        self.tempered_tol = tempered_tol if tempered_tol is not None else config.TEMPERED_TOL
        self.rp_tol = rp_tol if rp_tol is not None else config.RP_TOL
        self.engine = engine or CoefficientEngine(rp_tol=self.rp_tol)
        self.evaluator = evaluator or VoronoiEvaluator()
        self.detector = detector or SignDetector()
        logger.info(f"PropertySuite initialized. tempered_tol={self.tempered_tol}, rp_tol={self.rp_tol}")

    def _record(self, results: List[PropertyResult], module: str, invariant: str, passed: bool, detail: str):
        result = PropertyResult(module=module, invariant=invariant, passed=bool(passed), detail=detail)
        if not result.passed:
            logger.warning(f"PROPERTY FAILED: {module}.{invariant}: {detail}")
        else:
            logger.debug(f"{module}.{invariant} passed: {detail}")
        results.append(result)

    def _run(self, results: List[PropertyResult], module: str, invariant: str,
             check: Callable[[], Tuple[bool, str]]):
        try:
            passed, detail = check()
        except SpinorZetaError as e:
            passed, detail = False, f"{type(e).__name__}: {e}"
        self._record(results, module, invariant, passed, detail)

    def _sample(self, F: EigenformData) -> List[LocalFactor]:
        return [F.locals[p] for p in sorted(F.locals)[:LOCAL_SAMPLE]]

    def check_satake(self, F: EigenformData) -> List[PropertyResult]:
        """局部因子层面的不变量"""
        results: List[PropertyResult] = []
        sample = self._sample(F)

        def recurrence():
            worst = 0.0
            for f in sample:
                c = np.array([float(v) for v in local_coeffs(f, 12)])
                poly = np.array([1.0, -float(f.e1), float(f.e2), -float(f.e1), 1.0])
                product = np.convolve(c, poly)[:13]
                product[0] -= 1.0
                worst = max(worst, float(np.max(np.abs(product) / (1.0 + np.abs(c).max()))))
            return worst <= 1e-12, f"max relative residual {worst:.3e} over {len(sample)} primes"

        def inverse_pairs():
            bad = [f.p for f in sample if not spin_roots(f).is_inverse_closed(1e-8)]
            return not bad, f"{len(bad)} primes fail" + (f", first p={bad[0]}" if bad else "")

        def tempered():
            bad = [f.p for f in sample if not is_tempered(f, self.tempered_tol)]
            return not bad, f"{len(bad)} of {len(sample)} sampled primes not tempered" + (
                f", first p={bad[0]}" if bad else "")

        def tempered_bound():
            worst = 0.0
            checked = 0
            for f in sample:
                if not is_tempered(f, self.tempered_tol):
                    continue
                checked += 1
                c = local_coeffs(f, 12)
                excess = max(abs(float(c[j])) - math.comb(j + 3, 3) for j in range(13))
                worst = max(worst, excess)
            return worst <= 1e-6, f"max excess over binomial(j+3,3) is {worst:.3e} on {checked} tempered primes"

        def roundtrip():
            worst = 0.0
            for f in sample:
                lam = local_lambda(f, 2)
                back = hecke_to_local(f.p, lam[1], lam[2])
                worst = max(worst, abs(float(back.e1 - f.e1)), abs(float(back.e2 - f.e2)))
            return worst <= 1e-12, f"max deviation {worst:.3e}"

        self._run(results, "satake_core", "recurrence_identity", recurrence)
        self._run(results, "satake_core", "inverse_pair_roots", inverse_pairs)
        self._run(results, "satake_core", "temperedness", tempered)
        self._run(results, "satake_core", "tempered_coefficient_bound", tempered_bound)
        self._run(results, "satake_core", "hecke_roundtrip", roundtrip)
        return results

    def check_table(self, F: EigenformData, t: CoeffTable) -> List[PropertyResult]:
        """系数表层面的不变量"""
        results: List[PropertyResult] = []

        def unit():
            ok = t.a[1] == 1 and t.lam[1] == 1 and t.d4[1] == 1
            return ok, f"a[1]={t.a[1]}, lam[1]={t.lam[1]}, d4[1]={t.d4[1]}"

        def multiplicativity():
            dev_a, dev_l, dev_d = self.engine.multiplicativity_deviation(t)
            ok = dev_a <= 1e-9 and dev_l <= 1e-9 and dev_d == 0
            return ok, f"a {dev_a:.3e}, lam {dev_l:.3e}, d4 {dev_d}"

        def prefix():
            worst = float(np.max(np.abs(np.diff(t.prefix_a) - t.a[1:]) / (1.0 + np.abs(t.prefix_a[1:]))))
            return worst <= 1e-12, f"max relative step error {worst:.3e}"

        def crosscheck():
            worst = self.engine.crosscheck_hecke(t)
            return worst <= 1e-9, f"max deviation {worst:.3e}"

        def rp_bound():
            bad = self.engine.rp_violation_scan(t, self.rp_tol)
            return not bad, f"{len(bad)} violations" + (f", first n={bad[0]}" if bad else "")

        def sieve_oracle():
            limit = min(t.N, ORACLE_LIMIT)
            worst = 0.0
            for n in range(1, limit + 1):
                for which, table in (("a", t.a), ("lam", t.lam)):
                    naive = _naive_coefficient(F, n, which)
                    worst = max(worst, abs(table[n] - naive) / (1.0 + abs(naive)))
            return worst <= 1e-12, f"max relative deviation {worst:.3e} for n <= {limit}"

        def d4_series():
            partial = self.engine.d4_dirichlet_partial(t, 2.0)
            target = (math.pi ** 2 / 6) ** 4
            return 0 < partial < target, f"sum d4(n)/n^2 = {partial:.10g} < zeta(2)^4 = {target:.10g}"

        self._run(results, "coeff_engine", "unit_values", unit)
        self._run(results, "coeff_engine", "multiplicativity", multiplicativity)
        self._run(results, "coeff_engine", "prefix_consistency", prefix)
        self._run(results, "coeff_engine", "hecke_crosscheck", crosscheck)
        self._run(results, "coeff_engine", "rp_bound", rp_bound)
        self._run(results, "coeff_engine", "sieve_oracle_equivalence", sieve_oracle)
        self._run(results, "coeff_engine", "d4_dirichlet_consistency", d4_series)
        ratio = self.engine.mean_value_ratio(t, 0.65)
        logger.info(f"Mean-value ratio max |S_F(x)|/x^0.65 on '{t.label}': {ratio:.4g} (recorded only)")
        return results

    def check_voronoi(self, t: CoeffTable) -> List[PropertyResult]:
        """Voronoi 求值的不变量"""
        results: List[PropertyResult] = []
        M = min(t.N, 200)
        x = float(t.N)

        def order():
            up = self.evaluator.main_term(t, x, M)
            down = self.evaluator.main_term(t, x, M, descending=True)
            dev = abs(up - down) / max(1.0, abs(up))
            return dev <= 1e-9, f"ascending {up:.17g}, descending {down:.17g}"

        def height():
            T = self.evaluator.evaluate(t, x, M).T
            ratio = T ** 4 / (4 * math.pi ** 2 * (M + 0.5) * x)
            return abs(ratio - 1.0) <= 1e-12 and T == truncation_height(x, M), f"T^4 ratio {ratio:.17g}"

        self._run(results, "voronoi_eval", "summation_order_independence", order)
        self._run(results, "voronoi_eval", "truncation_height_identity", height)
        return results

    def check_detector(self) -> List[PropertyResult]:
        """核函数的不变量"""
        results: List[PropertyResult] = []
        kappa = self.detector.kappa

        def nonnegative():
            u = np.linspace(-1.0, 1.0, 200_001)
            worst = min(float(np.min(kernel(u, kappa, tau, self.detector.c_osc))) for tau in (1, -1))
            return worst >= -1e-15, f"min K_tau on grid {worst:.3e}"

        def mass():
            worst = 0.0
            for tau in (1, -1):
                J = self.detector.j_tau(None, 3 * kappa, kappa, tau, phi_fn=np.ones_like).J
                worst = max(worst, abs(J - kernel_mass(kappa, tau, self.detector.c_osc)))
            return worst <= 1e-8, f"max |quadrature - closed form| {worst:.3e}"

        self._run(results, "sign_detector", "kernel_nonnegativity", nonnegative)
        self._run(results, "sign_detector", "kernel_mass_identity", mass)
        return results

    def run(self, F: EigenformData, N: int) -> List[PropertyResult]:
        """
        构表并运行全部检查

        :return: PropertyResult 列表，顺序固定
        """
        logger.info(f"Running property suite on '{F.label}' with N={N}")
        t = self.engine.build_table(F, N)
        results = self.check_satake(F) + self.check_table(F, t) + self.check_voronoi(t) + self.check_detector()
        failed = [r for r in results if not r.passed]
        if failed:
            logger.warning(f"{len(failed)} of {len(results)} properties failed on '{F.label}'")
        else:
            logger.info(f"All {len(results)} properties passed on '{F.label}'")
        return results

    @staticmethod
    def summary(results: List[PropertyResult]) -> Dict[str, int]:
        passed = sum(1 for r in results if r.passed)
        return {"passed": passed, "failed": len(results) - passed}
