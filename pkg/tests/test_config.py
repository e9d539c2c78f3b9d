"""
配置管理模块的测试
"""
import math
import os
import unittest
import tempfile
import yaml
from src.config import Config

class TestConfig(unittest.TestCase):
    """测试配置管理模块"""

    def setUp(self):
        """测试前准备工作"""
        # 创建测试用的临时YAML配置文件
        self.config_file = tempfile.NamedTemporaryFile(mode='w', delete=False, suffix='.yaml')
        yaml_content = {
            "logging": {"level": "DEBUG", "file": "logs/test.log"},
            "data": {"dir": "yaml-data"},
            "coeffs": {"zero_tol": 1e-9, "segment_size": 4096},
            "detector": {"kappa": 16.0, "window_c": 2.5, "align_phase": False},
            "cli": {"threads": 3},
        }
        yaml.dump(yaml_content, self.config_file)
        self.config_file.close()

        # 备份当前环境变量
        self.original_env = os.environ.copy()
        for key in ("SPINOR_DATA_DIR", "KERNEL_KAPPA", "ZERO_TOL", "THREADS", "ALIGN_KERNEL_PHASE", "N_QUAD"):
            os.environ.pop(key, None)

    def tearDown(self):
        """测试后清理工作"""
        os.unlink(self.config_file.name)

        # 恢复原始环境变量
        os.environ.clear()
        os.environ.update(self.original_env)

    def test_config_load_from_yaml(self):
        """测试从YAML文件加载配置"""
        config = Config(config_file_path=self.config_file.name)
        self.assertEqual(config.KERNEL_KAPPA, 16.0)
        self.assertEqual(config.WINDOW_C, 2.5)
        self.assertEqual(config.ZERO_TOL, 1e-9)
        self.assertEqual(config.SEGMENT_SIZE, 4096)
        self.assertEqual(config.THREADS, 3)
        self.assertFalse(config.ALIGN_KERNEL_PHASE)
        self.assertEqual(config.data_path("a.csv"), os.path.join("yaml-data", "a.csv"))

    def test_config_priority(self):
        """测试配置加载优先级：环境变量 > YAML > 默认值"""
        os.environ["KERNEL_KAPPA"] = "24"
        os.environ["SPINOR_DATA_DIR"] = "env-data"
        os.environ["ALIGN_KERNEL_PHASE"] = "true"
        config = Config(config_file_path=self.config_file.name)
        self.assertEqual(config.KERNEL_KAPPA, 24.0)
        self.assertEqual(config.DATA_DIR, "env-data")
        self.assertTrue(config.ALIGN_KERNEL_PHASE)

        # YAML 中没有的项使用默认值
        self.assertEqual(config.N_QUAD, 1000)
        self.assertEqual(config.SIGN_EPS, 0.05)

    def test_defaults(self):
        """测试没有 YAML 时的默认值"""
        config = Config(config_file_path=os.path.join(tempfile.gettempdir(), "does-not-exist.yaml"))
        self.assertAlmostEqual(config.PHASE_CONSTANT, 4.0 * math.sqrt(2.0 * math.pi), places=15)
        self.assertEqual(config.PERRON_KAPPA, 1.1)
        self.assertEqual(config.KERNEL_KAPPA, 12.0)
        self.assertEqual(config.THREADS, 1)
        self.assertTrue(config.ALIGN_KERNEL_PHASE)
        self.assertEqual(config.DATA_DIR, "data")

if __name__ == "__main__":
    unittest.main()
