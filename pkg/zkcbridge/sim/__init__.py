from ._catalog import *
from ._properties import *
from ._scenario import *
from ._trace import *
from ._world import *
