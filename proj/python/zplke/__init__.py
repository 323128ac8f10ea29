"""Latent factual knowledge estimation for causal language models."""

try:
    from ._zplke import *  # noqa: F401,F403
    from . import _zplke as _core
except ImportError:  # in-tree builds put the extension on sys.path directly
    from _zplke import *  # noqa: F401,F403
    import _zplke as _core

__all__ = [name for name in dir(_core) if not name.startswith("_")]
