from ._origin import *
