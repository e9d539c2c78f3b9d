from .coeff_engine import *
