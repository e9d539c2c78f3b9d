from .voronoi_eval import *
