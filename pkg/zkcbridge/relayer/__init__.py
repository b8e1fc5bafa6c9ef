from ._relayer import *
