"""
Voronoi 评估模块的测试
"""
import math
import statistics
import unittest

import mpmath
import numpy as np

from src.coeffs.coeff_engine import CoeffTable, CoefficientEngine
from src.data.data_collection import SyntheticFormModule
from src.voronoi.voronoi_eval import PerronConfig, VoronoiEvaluator, truncation_height
from src.exceptions.exceptions import (
    InsufficientDataError,
    InvalidConfigurationError,
    MissingPrimeDataError,
    TableTooSmallError,
)

C_OSC = 4.0 * math.sqrt(2.0 * math.pi)


class TestMainTerm(unittest.TestCase):
    """测试截断 Voronoi 主项"""

    @classmethod
    def setUpClass(cls):
        cls.engine = CoefficientEngine()
        generator = SyntheticFormModule()
        cls.trivial = cls.engine.build_table(generator.gen_trivial(5000), 5000)
        cls.tempered = cls.engine.build_table(generator.gen_tempered(21, 5000), 5000)
        cls.evaluator = VoronoiEvaluator(phase_constant=C_OSC, threads=1)

    def test_single_term(self):
        mpmath.mp.dps = 50
        oracle = (2 * mpmath.pi) ** mpmath.mpf(-0.75) * mpmath.cos(4 * mpmath.sqrt(2 * mpmath.pi) + mpmath.pi / 4)
        self.assertAlmostEqual(self.evaluator.main_term(self.tempered, 1.0, 1), float(oracle), places=14)

    def test_against_mpmath_sum(self):
        mpmath.mp.dps = 50
        c = 4 * mpmath.sqrt(2 * mpmath.pi)
        for x in (37.5, 1000.0):
            oracle = mpmath.mpf(0)
            for n in range(1, 21):
                oracle += (mpmath.mpf(float(self.tempered.a[n])) * mpmath.mpf(n) ** mpmath.mpf(-0.625)
                           * mpmath.cos(c * (n * mpmath.mpf(x)) ** mpmath.mpf(0.25) + mpmath.pi / 4))
            oracle *= mpmath.mpf(x) ** mpmath.mpf(0.375) * (2 * mpmath.pi) ** mpmath.mpf(-0.75)
            value = self.evaluator.main_term(self.tempered, x, 20)
            self.assertAlmostEqual(value, float(oracle), delta=1e-10 * max(1.0, abs(float(oracle))))

    def test_empty_sum(self):
        self.assertEqual(self.evaluator.main_term(self.tempered, 123.4, 0), 0.0)

    def test_table_too_small(self):
        with self.assertRaises(TableTooSmallError):
            self.evaluator.main_term(self.tempered, 10.0, 5001)
        with self.assertRaises(InvalidConfigurationError):
            self.evaluator.main_term(self.tempered, 0.0, 3)

    def test_summation_order(self):
        up = self.evaluator.main_term(self.tempered, 4000.0, 5000)
        down = self.evaluator.main_term(self.tempered, 4000.0, 5000, descending=True)
        self.assertLessEqual(abs(up - down), 1e-9 * max(1.0, abs(up)))

    def test_fe_sign(self):
        odd = CoeffTable.from_coefficients(self.tempered.a, weight=21)
        plain = self.evaluator.main_term(odd, 500.0, 30)
        signed = self.evaluator.main_term(odd, 500.0, 30, apply_fe_sign=True)
        self.assertEqual(signed, -plain)
        self.assertEqual(self.evaluator.main_term(self.trivial, 500.0, 30, apply_fe_sign=True),
                         self.evaluator.main_term(self.trivial, 500.0, 30))


class TestEvaluate(unittest.TestCase):
    """测试精确部分和与主项的对照"""

    @classmethod
    def setUpClass(cls):
        engine = CoefficientEngine()
        generator = SyntheticFormModule()
        cls.trivial = engine.build_table(generator.gen_trivial(5000), 5000)
        cls.tempered = engine.build_table(generator.gen_tempered(4, 5000), 5000)
        cls.evaluator = VoronoiEvaluator(phase_constant=C_OSC, threads=1)

    def test_trivial_exact_side(self):
        evaluation = self.evaluator.evaluate(self.trivial, 10, 10)
        self.assertEqual(evaluation.exact, 89.0)
        self.assertEqual(evaluation.residual, evaluation.exact - evaluation.main_term)
        self.assertEqual(self.evaluator.evaluate(self.trivial, 10.9, 10).exact, 89.0)

    def test_truncation_height(self):
        for x, M in ((10.0, 10), (1234.5, 77), (4000.0, 1)):
            evaluation = self.evaluator.evaluate(self.tempered, x, M)
            self.assertEqual(evaluation.T, truncation_height(x, M))
            ratio = evaluation.T ** 4 / (4 * math.pi ** 2 * (M + 0.5) * x)
            self.assertAlmostEqual(ratio, 1.0, delta=1e-12)

    def test_grid_threads_preserve_order(self):
        xs = list(np.geomspace(50, 4000, 12))
        rule = lambda x: int(x ** 0.6)
        sequential = self.evaluator.evaluate_grid(self.tempered, xs, rule)
        threaded = VoronoiEvaluator(phase_constant=C_OSC, threads=4).evaluate_grid(self.tempered, xs, rule)
        self.assertEqual(sequential, threaded)
        self.assertEqual([e.x for e in threaded], [float(x) for x in xs])

    def test_error_exponent_fit(self):
        xs = list(np.geomspace(100, 4000, 10))
        fit, evaluations = self.evaluator.error_exponent_fit(self.tempered, xs, lambda x: int(x ** 0.6))
        self.assertEqual(len(evaluations), 10)
        self.assertLessEqual(fit.n_points, 10)
        self.assertTrue(math.isfinite(fit.slope))
        with self.assertRaises(InsufficientDataError):
            self.evaluator.error_exponent_fit(self.tempered, xs[:7], lambda x: 5)


class TestI0(unittest.TestCase):
    """测试 I_0 的渐近主项"""

    def test_zero_of_cosine(self):
        t = (math.pi / 16) ** 4
        self.assertAlmostEqual(VoronoiEvaluator.i0_leading(t, 20), 0.0, places=15)

    def test_parity(self):
        self.assertEqual(VoronoiEvaluator.i0_leading(7.3, 21), -VoronoiEvaluator.i0_leading(7.3, 20))

    def test_value_at_sixteen(self):
        mpmath.mp.dps = 50
        oracle = (2 * mpmath.pi) ** mpmath.mpf(-0.5) * mpmath.mpf(16) ** mpmath.mpf(0.375) * mpmath.cos(8 + mpmath.pi / 4)
        self.assertAlmostEqual(VoronoiEvaluator.i0_leading(16.0, 20), float(oracle), places=14)
        self.assertAlmostEqual(VoronoiEvaluator.i0_leading(16.0, 19), -float(oracle), places=14)

    def test_amplitude_law(self):
        """余弦都取 1 时幅度比为 (t2/t1)^{3/8}"""
        t1 = ((2 * math.pi * 3 - math.pi / 4) / 4) ** 4
        t2 = ((2 * math.pi * 6 - math.pi / 4) / 4) ** 4
        ratio = VoronoiEvaluator.i0_leading(t2, 20) / VoronoiEvaluator.i0_leading(t1, 20)
        self.assertAlmostEqual(ratio, (t2 / t1) ** 0.375, places=10)

    def test_two_term(self):
        self.assertEqual(VoronoiEvaluator.i0_two_term(50.0, 20), VoronoiEvaluator.i0_leading(50.0, 20))
        second = 0.5 * 50.0 ** 0.125 * math.cos(4 * 50.0 ** 0.25 + 3 * math.pi / 4)
        self.assertAlmostEqual(VoronoiEvaluator.i0_two_term(50.0, 20, e1=0.5),
                               VoronoiEvaluator.i0_leading(50.0, 20) + second, places=14)

    def test_domain(self):
        with self.assertRaises(InvalidConfigurationError):
            VoronoiEvaluator.i0_leading(0.0, 20)


class TestPerron(unittest.TestCase):
    """测试 Perron 积分对照"""

    @classmethod
    def setUpClass(cls):
        cls.engine = CoefficientEngine()
        cls.form = SyntheticFormModule().gen_tempered(12, 1000)
        cls.table = cls.engine.build_table(cls.form, 1000)
        cls.evaluator = VoronoiEvaluator(phase_constant=C_OSC)

    def test_config_validation(self):
        with self.assertRaises(InvalidConfigurationError):
            PerronConfig(T=100, P=97, kappa=1.0)
        with self.assertRaises(InvalidConfigurationError):
            PerronConfig(T=0, P=97)
        with self.assertRaises(InvalidConfigurationError):
            PerronConfig(T=100, P=1)
        self.assertEqual(PerronConfig(T=100, P=97).kappa, 1.1)

    def test_single_term(self):
        value = self.evaluator.perron_oracle(self.form, 1.5, PerronConfig(T=2000, P=997))
        self.assertAlmostEqual(value, 1.0, delta=0.1)

    def test_ladder(self):
        """完整阶梯上三个形式的偏差中位数逐级不增"""
        ladder = [(250, 97), (500, 197), (1000, 499), (2000, 997)]
        generator = SyntheticFormModule()
        forms = [self.form] + [generator.gen_tempered(seed, 1000) for seed in (13, 14)]
        tables = [self.table] + [self.engine.build_table(F, 1000) for F in forms[1:]]
        for x in (6.5, 10.5):
            medians = []
            for T, P in ladder:
                cfg = PerronConfig(T=T, P=P)
                deviations = [self.evaluator.perron_compare(F, t, x, cfg).deviation for F, t in zip(forms, tables)]
                medians.append(statistics.median(deviations))
            with self.subTest(x=x):
                self.assertLessEqual(medians[-1], 0.1)
                for before, after in zip(medians, medians[1:]):
                    self.assertLessEqual(after, before, medians)

    def test_comparison_row(self):
        row = self.evaluator.perron_compare(self.form, self.table, 6.5, PerronConfig(T=500, P=197))
        self.assertEqual(row.direct, float(self.table.prefix_a[6]))
        self.assertEqual(row.deviation, abs(row.oracle - row.direct))
        self.assertEqual((row.T, row.P), (500.0, 197))

    def test_preconditions(self):
        with self.assertRaises(InvalidConfigurationError):
            self.evaluator.perron_oracle(self.form, 6.0, PerronConfig(T=100, P=97))
        with self.assertRaises(InvalidConfigurationError):
            self.evaluator.perron_oracle(self.form, 0.5, PerronConfig(T=100, P=97))
        with self.assertRaises(MissingPrimeDataError):
            self.evaluator.perron_oracle(self.form, 6.5, PerronConfig(T=100, P=1009))

    def test_envelope(self):
        envelope = VoronoiEvaluator.perron_envelope(6.5, 1000, 1.1, self.table)
        self.assertTrue(0 < envelope < math.inf)
        self.assertLess(VoronoiEvaluator.perron_envelope(6.5, 2000, 1.1, self.table), envelope)
        self.assertEqual(VoronoiEvaluator.perron_envelope(6.0, 1000, 1.1, self.table), math.inf)
        with self.assertRaises(TableTooSmallError):
            VoronoiEvaluator.perron_envelope(600.5, 1000, 1.1, self.table)


if __name__ == "__main__":
    unittest.main()
