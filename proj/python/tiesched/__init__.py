"""Censored log-t length modeling, tail-risk scores, and a
continuous-batching scheduling simulator."""

try:
    from ._core import *  # noqa: F401,F403  (installed wheel layout)
    from ._core import __version__  # noqa: F401
except ImportError:  # in-tree layout: _core sits next to this package on sys.path
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
