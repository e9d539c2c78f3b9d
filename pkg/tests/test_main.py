"""
命令行入口与退出码的测试
"""
import contextlib
import io
import os
import shutil
import tempfile
import unittest
from unittest.mock import patch

import src.main
from src.exceptions.exceptions import QuadratureAccuracyError, RootFindingError


class TestMain(unittest.TestCase):
    """测试 main() 的退出码约定"""

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def run_main(self, argv):
        stdout, stderr = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            code = src.main.main(argv)
        return code, stdout.getvalue(), stderr.getvalue()

    def test_success(self):
        out = os.path.join(self.tmpdir, "coeffs.csv")
        code, stdout, _ = self.run_main(["coeffs", "--gen", "trivial", "--N", "10", "--out", out])
        self.assertEqual(code, 0)
        self.assertIn("S_F(N)=89", stdout)
        self.assertIn(f"wrote {out}", stdout)

    def test_validation_failure(self):
        code, _, stderr = self.run_main(["voronoi", "--gen", "trivial", "--N", "100"])
        self.assertEqual(code, 2)
        self.assertIn("x-grid", stderr)

    def test_missing_file(self):
        code, _, stderr = self.run_main(["coeffs", "--input", os.path.join(self.tmpdir, "none.txt"), "--N", "10"])
        self.assertEqual(code, 2)
        self.assertIn("cannot read file", stderr)

    def test_failed_properties(self):
        code, stdout, _ = self.run_main(["check", "--gen", "sk:0", "--N", "2000"])
        self.assertEqual(code, 2)
        self.assertIn("FAIL", stdout)

    def test_accuracy_failures(self):
        for error in (QuadratureAccuracyError("too coarse"), RootFindingError("no root")):
            with patch("src.main.CommandRunner.run", side_effect=error):
                code, _, stderr = self.run_main(["perron", "--gen", "trivial", "--x", "6.5"])
            self.assertEqual(code, 3)
            self.assertIn(str(error), stderr)

    def test_argparse_rejects_both_sources(self):
        with self.assertRaises(SystemExit):
            with contextlib.redirect_stderr(io.StringIO()):
                src.main.main(["coeffs", "--gen", "trivial", "--input", "f.txt", "--N", "10"])


if __name__ == "__main__":
    unittest.main()
