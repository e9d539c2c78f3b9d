from .satake_core import *
