from .sign_detector import *
