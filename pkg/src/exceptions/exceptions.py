"""
异常处理模块 - 定义系统特定的异常类
"""

class SpinorZetaError(Exception):
    """系统基础异常类"""
    pass


class InvalidLocalFactorError(SpinorZetaError):
    """局部因子数据无效（p 非素数、e1/e2 非有限实数等）"""
    pass


class RootFindingError(SpinorZetaError):
    """求根失败，携带出错的多项式系数"""
    def __init__(self, message, coefficients=None):
        super().__init__(message)
        self.coefficients = coefficients


class MissingPrimeDataError(SpinorZetaError):
    """缺少某个素数的局部数据"""
    def __init__(self, message, prime=None):
        super().__init__(message)
        self.prime = prime


class TableTooSmallError(SpinorZetaError):
    """系数表范围不足"""
    def __init__(self, message, requested=None, available=None):
        super().__init__(message)
        self.requested = requested
        self.available = available


class QuadratureAccuracyError(SpinorZetaError):
    """数值积分精度不足或预算耗尽"""
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InsufficientDataError(SpinorZetaError):
    """拟合可用数据点不足"""
    pass


class EigenvalueFileError(SpinorZetaError):
    """特征值文件格式或内容错误"""
    def __init__(self, message, path=None, line_number=None):
        super().__init__(message)
        self.path = path
        self.line_number = line_number


class ReportWriteError(SpinorZetaError):
    """报告写入失败"""
    pass


class InvalidConfigurationError(SpinorZetaError):
    """运行配置无效"""
    pass


# 精度类错误，命令行以退出码 3 报告
ACCURACY_ERRORS = (QuadratureAccuracyError, RootFindingError)
