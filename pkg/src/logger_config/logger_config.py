"""
日志配置模块 - 配置全局日志记录器
"""
import logging
import os
from src.config import config

def setup_logger(name="SpinorZeta", log_file=None, log_level=None):
    """
    配置并返回一个日志记录器实例

    :param name: 日志记录器名称
    :param log_file: 日志文件路径，默认使用配置中的 LOG_FILE
    :param log_level: 日志级别名称，默认使用配置中的 LOG_LEVEL
    :return: Logger对象
    """
    log_file = log_file or config.LOG_FILE
    # 确保日志文件目录存在
    log_path = os.path.dirname(log_file)
    if log_path and not os.path.exists(log_path):
        os.makedirs(log_path)

    log_format = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    level = getattr(logging, (log_level or config.LOG_LEVEL).upper(), logging.INFO)

    logger = logging.getLogger(name)
    logger.setLevel(level)

    # 清除已存在的处理器
    if logger.handlers:
        logger.handlers.clear()

    file_handler = logging.FileHandler(log_file)
    file_handler.setFormatter(log_format)
    logger.addHandler(file_handler)

    # 控制台处理器写 stderr，stdout 留给命令输出
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(log_format)
    logger.addHandler(console_handler)

    return logger

# 全局日志记录器实例
logger = setup_logger()
