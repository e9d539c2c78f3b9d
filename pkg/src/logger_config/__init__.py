from .logger_config import *
