from ._guardians import *
