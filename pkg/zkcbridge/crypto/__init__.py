from ._crypto import *
