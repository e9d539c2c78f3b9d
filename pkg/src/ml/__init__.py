from .fitting import *
