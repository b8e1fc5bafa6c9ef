from ._aztec import *
