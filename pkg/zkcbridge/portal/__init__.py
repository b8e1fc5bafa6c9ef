from ._portal import *
