from ._plotting import *
