from . import (
    aztec,
    cli,
    codec,
    crypto,
    errors,
    graphing,
    guardians,
    origin,
    plotting,
    portal,
    relayer,
    sim,
    vectors,
)
from .graphing import team_colours
