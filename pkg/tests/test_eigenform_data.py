"""
依赖真实本征形式数据的测试，仅当 SPINOR_EIGENFORM_FILE 指向真实数据文件时执行
"""
import math
import os
import unittest

import numpy as np

from src.coeffs.coeff_engine import CoefficientEngine
from src.data.data_processing import load
from src.detector.sign_detector import SignDetector, phase_aligned_t
from src.voronoi.voronoi_eval import VoronoiEvaluator

EIGENFORM_FILE = os.getenv("SPINOR_EIGENFORM_FILE")
MIN_COVERAGE = 1_000_000


@unittest.skipUnless(EIGENFORM_FILE, "SPINOR_EIGENFORM_FILE is not set; no genuine eigenform data to test against")
class TestGenuineEigenform(unittest.TestCase):
    """真实数据上的有限范围检查"""

    @classmethod
    def setUpClass(cls):
        F = load(EIGENFORM_FILE)
        if not F.genuine:
            raise unittest.SkipTest(f"{EIGENFORM_FILE} is synthetic (family= in header)")
        if F.prime_bound < MIN_COVERAGE:
            raise unittest.SkipTest(f"{EIGENFORM_FILE} covers primes up to {F.prime_bound}, need {MIN_COVERAGE}")
        cls.N = F.prime_bound
        cls.form = F
        cls.table = CoefficientEngine().build_table(F, cls.N)
        cls.detector = SignDetector(kappa=12.0, eps=0.05, window_c=3.0)

    def test_residual_exponent(self):
        xs = list(np.geomspace(1e4, self.N / 2, 16))
        fit, _ = VoronoiEvaluator().error_exponent_fit(self.table, xs, lambda x: int(math.floor(x ** 0.6)))
        self.assertLessEqual(fit.slope, 0.5)

    def test_residual_changes_sign(self):
        X = self.N / 4
        xs = list(np.linspace(X, 2 * X, 64))
        residuals = [e.residual for e in VoronoiEvaluator().evaluate_grid(
            self.table, xs, lambda x: int(math.floor(x ** 0.6)))]
        self.assertTrue(min(residuals) < 0 < max(residuals))

    def test_kernel_signs(self):
        kappa = self.detector.kappa
        top = math.floor(self.N ** 0.25 - kappa)
        ts = [phase_aligned_t(float(t), self.detector.c_osc) for t in (top, top - 1, top - 2)]
        ts = [t for t in ts if t > 2 * kappa]
        if len(ts) < 3:
            self.skipTest(f"N={self.N} leaves fewer than three kernel scales above 2*kappa={2 * kappa:g}")
        for t in ts:
            with self.subTest(t=t):
                self.assertGreater(self.detector.j_tau(self.table, t, kappa, 1).J, 0.25)
                self.assertLess(self.detector.j_tau(self.table, t, kappa, -1).J, -0.25)

    def test_scan_ladder(self):
        hi = self.N ** 0.9
        for x in np.geomspace(1e4, hi, 6):
            scan = self.detector.scan_window(self.table, float(x))
            with self.subTest(x=float(x)):
                self.assertGreaterEqual(scan.plus, scan.lower_target)
                self.assertGreaterEqual(scan.minus, scan.lower_target)

    def test_extrema_constants_recorded(self):
        reports = [self.detector.find_extrema(self.table, float(X)) for X in np.geomspace(1e4, self.N ** 0.9, 6)]
        self.assertTrue(all(r.c1_emp > 0 and r.c2_emp > 0 for r in reports),
                        [(r.X, r.c1_emp, r.c2_emp) for r in reports])


if __name__ == "__main__":
    unittest.main()
