from .property_suite import *
