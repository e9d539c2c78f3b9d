"""
系数引擎模块的测试
"""
import math
import unittest

import numpy as np

from src.coeffs.coeff_engine import (
    CoeffTable,
    CoefficientEngine,
    d4_table,
    prime_power_blocks,
    smallest_prime_factor,
)
from src.data.data_collection import SyntheticFormModule
from src.satake.satake_core import EigenformData, LocalFactor, local_coeffs, primes_up_to
from src.exceptions.exceptions import InvalidConfigurationError, MissingPrimeDataError, TableTooSmallError


def _factor(n):
    out = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


class TestSieve(unittest.TestCase):
    """测试最小素因子筛与素数幂分解"""

    def test_smallest_prime_factor(self):
        spf = smallest_prime_factor(30)
        self.assertEqual(spf[1], 1)
        self.assertEqual([int(spf[n]) for n in (2, 9, 15, 25, 29, 30)], [2, 3, 3, 5, 29, 2])

    def test_prime_power_blocks(self):
        """每个 n 恰好出现一次，且 n = p^v * rest"""
        seen = []
        for n, p, v, rest in prime_power_blocks(200):
            np.testing.assert_array_equal(n, p ** v * rest)
            self.assertTrue(np.all(rest % p != 0))
            self.assertTrue(np.all(rest < n))
            seen.extend(n.tolist())
        self.assertEqual(seen, list(range(2, 201)))

    def test_d4_table(self):
        d4 = d4_table(100)
        for n in (1, 2, 12, 16, 36, 60, 97):
            expected = math.prod(math.comb(v + 3, 3) for v in _factor(n).values())
            self.assertEqual(int(d4[n]), expected)
        # sum_{n <= 10} d_4(n)
        self.assertEqual(int(d4[1:11].sum()), 89)


class TestCoefficientEngine(unittest.TestCase):
    """测试系数表构造与表级校验"""

    @classmethod
    def setUpClass(cls):
        cls.engine = CoefficientEngine()
        cls.generator = SyntheticFormModule()
        cls.trivial = cls.generator.gen_trivial(2000)
        cls.tempered = cls.generator.gen_tempered(7, 20000)

    def test_trivial_table_is_d4(self):
        t = self.engine.build_table(self.trivial, 2000)
        self.assertEqual(t.a[12], 40)
        self.assertEqual(t.d4[12], 40)
        np.testing.assert_array_equal(t.a[1:], t.d4[1:].astype(np.float64))
        self.assertEqual(t.partial_sum(10), 89)
        self.assertEqual(t.partial_sum(10.7), 89)
        self.assertEqual(t.partial_sum(0.5), 0.0)

    def test_unit_values(self):
        t = self.engine.build_table(self.tempered, 500)
        self.assertEqual((t.a[1], t.lam[1], t.d4[1]), (1.0, 1.0, 1))

    def test_zero_local_factor_at_two(self):
        locals_ = {int(p): LocalFactor(int(p), 4, 6) for p in primes_up_to(10)}
        locals_[2] = LocalFactor(2, 0, 0)
        F = EigenformData(weight=20, fe_sign=1, label="mixed", locals=locals_, prime_bound=10)
        t = self.engine.build_table(F, 4)
        self.assertEqual(t.a[2], 0.0)
        self.assertEqual(t.a[4], 0.0)
        self.assertEqual(t.a[3], 4.0)

    def test_matches_naive_product(self):
        """筛法结果与逐 n 的素数幂乘积一致"""
        F = self.tempered
        t = self.engine.build_table(F, 3000)
        for n in range(1, 3001, 7):
            value = 1.0
            for p, v in _factor(n).items():
                value *= local_coeffs(F.locals[p], v)[v]
            self.assertAlmostEqual(t.a[n], value, delta=1e-12 * (1 + abs(value)))

    def test_prime_values_from_sorted_lookup(self):
        """数据覆盖超过 N 时，a(p) 仍取到对应素数的 e1"""
        F = self.tempered
        t = self.engine.build_table(F, 500)
        for p in primes_up_to(500):
            p = int(p)
            self.assertEqual(t.a[p], float(F.locals[p].e1))
            self.assertEqual(t.lam[p], float(F.locals[p].e1))
        self.assertAlmostEqual(t.a[2 ** 8], float(local_coeffs(F.locals[2], 8)[8]), delta=1e-12)
        self.assertAlmostEqual(t.a[2 * 499], float(F.locals[2].e1) * float(F.locals[499].e1), delta=1e-12)

    def test_multiplicativity_and_prefix(self):
        t = self.engine.build_table(self.tempered, 20000)
        dev_a, dev_l, dev_d = self.engine.multiplicativity_deviation(t)
        self.assertLessEqual(dev_a, 1e-9)
        self.assertLessEqual(dev_l, 1e-9)
        self.assertEqual(dev_d, 0)
        np.testing.assert_allclose(np.diff(t.prefix_a), t.a[1:], atol=1e-9)

    def test_crosscheck_hecke(self):
        t = self.engine.build_table(self.tempered, 20000)
        self.assertLessEqual(self.engine.crosscheck_hecke(t), 1e-9)
        # 无平方因子时 a = lambda；a(p^2) = lambda(p^2) + 1/p
        for n in (6, 30, 2 * 3 * 5 * 7):
            self.assertAlmostEqual(t.a[n], t.lam[n], places=12)
        for p in (2, 3, 11):
            self.assertAlmostEqual(t.a[p * p], t.lam[p * p] + 1.0 / p, places=12)

    def test_sign_counts(self):
        trivial = self.engine.build_table(self.trivial, 2000)
        counts = self.engine.sign_counts(trivial, 100)
        self.assertEqual((counts.plus, counts.minus, counts.zero), (100, 0, 0))
        self.assertEqual(self.engine.sign_counts(trivial, 1).plus, 1)

        t = self.engine.build_table(self.tempered, 10000)
        counts = self.engine.sign_counts(t, 10000)
        self.assertEqual(counts.plus + counts.minus + counts.zero, 10000)
        smaller = self.engine.sign_counts(t, 5000)
        self.assertLessEqual(smaller.plus, counts.plus)
        self.assertLessEqual(smaller.minus, counts.minus)

    def test_sign_counts_zero_band(self):
        """落入零带的系数单独计数"""
        a = np.array([0.0, 1.0, 0.0, -2.0, 1e-14, 3.0])
        t = CoeffTable.from_coefficients(a)
        counts = self.engine.sign_counts(t, 5, zero_tol=1e-10)
        self.assertEqual((counts.plus, counts.minus, counts.zero), (2, 1, 2))

    def test_sign_counts_beyond_table(self):
        t = self.engine.build_table(self.trivial, 100)
        with self.assertRaises(TableTooSmallError):
            self.engine.sign_counts(t, 101)

    def test_rp_violation_scan(self):
        trivial = self.engine.build_table(self.trivial, 2000)
        self.assertEqual(self.engine.rp_violation_scan(trivial), [])
        tempered = self.engine.build_table(self.tempered, 20000)
        self.assertEqual(self.engine.rp_violation_scan(tempered), [])
        thetas = {int(p): 0.1 for p in primes_up_to(1000)}
        sk = self.generator.gen_sk(1000, angles=thetas)
        violations = self.engine.rp_violation_scan(self.engine.build_table(sk, 1000))
        self.assertTrue(violations)
        self.assertIn(5, violations)

    def test_sk_lambda_positive(self):
        """SK 型数据的全部 lambda(n) 为正"""
        sk = self.generator.gen_sk(100000, seed=3)
        t = self.engine.build_table(sk, 100000)
        self.assertTrue(np.all(t.lam[1:] > 0))

    def test_d4_dirichlet_partial(self):
        target = (math.pi ** 2 / 6) ** 4
        small = self.engine.d4_dirichlet_partial(self.engine.build_table(self.trivial, 200))
        large = self.engine.d4_dirichlet_partial(self.engine.build_table(self.trivial, 2000))
        self.assertLess(small, large)
        self.assertLess(large, target)

    def test_stream_prefix_sums(self):
        """分段流式前缀和与整表一致"""
        t = self.engine.build_table(self.tempered, 5000)
        segments = list(self.engine.stream_prefix_sums(self.tempered, 5000, segment_size=777))
        values = np.concatenate([seg[2] for seg in segments])
        prefix = np.concatenate([seg[3] for seg in segments])
        self.assertEqual(segments[0][0], 1)
        self.assertEqual(segments[-1][1], 5000)
        np.testing.assert_allclose(values, t.a[1:], rtol=0, atol=1e-12)
        np.testing.assert_allclose(prefix, t.prefix_a[1:], rtol=0, atol=1e-9)

    def test_build_table_errors(self):
        with self.assertRaises(InvalidConfigurationError):
            self.engine.build_table(self.trivial, 0)
        with self.assertRaises(MissingPrimeDataError) as ctx:
            self.engine.build_table(self.trivial, 2100)
        self.assertEqual(ctx.exception.prime, 2003)


if __name__ == "__main__":
    unittest.main()
