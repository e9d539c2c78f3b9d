"""
配置管理模块 - 负责加载和提供数值引擎的配置信息
"""
import math
import os
import yaml
from dotenv import load_dotenv


class Config:
    """
    配置管理类，从环境变量、YAML文件等加载配置。
    优先级：环境变量 > YAML > 默认值
    """
    def __init__(self, config_file_path=None, env_file_path=None):
        """
        初始化配置管理器。
        :param config_file_path: YAML配置文件路径 (可选)
        :param env_file_path: 环境变量文件路径 (可选, 默认为根目录下的.env)
        """
        # 加载环境变量
        if env_file_path:
            load_dotenv(env_file_path)
        else:
            load_dotenv()  # 默认加载根目录下的.env文件

        config_path = config_file_path or os.path.join(os.path.dirname(os.path.abspath(__file__)), '../../config.yaml')
        self._config_from_yaml = {}
        if os.path.exists(config_path):
            with open(config_path, 'r', encoding='utf-8') as f:
                self._config_from_yaml = yaml.safe_load(f) or {}

        # 日志配置
        self.LOG_LEVEL = os.getenv("LOG_LEVEL") or self._get_from_yaml("logging.level", "INFO")
        self.LOG_FILE = os.getenv("LOG_FILE") or self._get_from_yaml("logging.file", "spinor_zeta.log")

        # 默认数据目录（CLI 唯一依赖的环境变量）
        self.DATA_DIR = os.getenv("SPINOR_DATA_DIR") or self._get_from_yaml("data.dir", "data")

        # 局部因子
        self.TEMPERED_TOL = float(os.getenv("TEMPERED_TOL") or self._get_from_yaml("satake.tempered_tol", 1e-8))

        # 系数表
        self.ZERO_TOL = float(os.getenv("ZERO_TOL") or self._get_from_yaml("coeffs.zero_tol", 1e-10))
        self.RP_TOL = float(os.getenv("RP_TOL") or self._get_from_yaml("coeffs.rp_tol", 1e-6))
        self.SEGMENT_SIZE = int(os.getenv("SEGMENT_SIZE") or self._get_from_yaml("coeffs.segment_size", 1 << 20))

        # Voronoi / Perron
        self.PHASE_CONSTANT = float(os.getenv("PHASE_CONSTANT") or self._get_from_yaml(
            "voronoi.phase_constant", 4.0 * math.sqrt(2.0 * math.pi)))
        self.PERRON_KAPPA = float(os.getenv("PERRON_KAPPA") or self._get_from_yaml("voronoi.perron_kappa", 1.1))
        self.PERRON_PHASE_STEP = float(os.getenv("PERRON_PHASE_STEP") or self._get_from_yaml(
            "voronoi.perron_phase_step", math.pi / 8))

        # 核检测器
        self.KERNEL_KAPPA = float(os.getenv("KERNEL_KAPPA") or self._get_from_yaml("detector.kappa", 12.0))
        self.WINDOW_C = float(os.getenv("WINDOW_C") or self._get_from_yaml("detector.window_c", 3.0))
        self.SIGN_EPS = float(os.getenv("SIGN_EPS") or self._get_from_yaml("detector.eps", 0.05))
        self.N_QUAD = int(os.getenv("N_QUAD") or self._get_from_yaml("detector.n_quad", 1000))
        self.QUAD_PIECE_BUDGET = int(os.getenv("QUAD_PIECE_BUDGET") or self._get_from_yaml(
            "detector.piece_budget", 20_000_000))
        align = os.getenv("ALIGN_KERNEL_PHASE")
        if align is not None:
            self.ALIGN_KERNEL_PHASE = align.lower() == "true"
        else:
            self.ALIGN_KERNEL_PHASE = bool(self._get_from_yaml("detector.align_phase", True))

        # 命令行
        self.THREADS = int(os.getenv("THREADS") or self._get_from_yaml("cli.threads", 1))

    def _get_from_yaml(self, path, default=None):
        """
        从嵌套的YAML配置中提取值
        :param path: 以点分隔的配置路径 (例如 "detector.kappa")
        :param default: 如果找不到值，返回的默认值
        :return: 配置值或默认值
        """
        keys = path.split('.')
        value = self._config_from_yaml
        for key in keys:
            if isinstance(value, dict) and key in value:
                value = value[key]
            else:
                return default
        return value

    def data_path(self, name):
        """
        返回默认数据目录下的文件路径
        """
        return os.path.join(self.DATA_DIR, name)


# 全局配置实例 - 单例模式
config = Config()
