from ._scomcp import *  # noqa: F401,F403
from ._scomcp import __version__  # noqa: F401
