"""Pick the compiled kernels when importable; ``FLOODRANK_PURE=1`` forces the fallback."""
import os

from . import _pytree

if os.environ.get("FLOODRANK_PURE"):
    kernels = _pytree
    BACKEND = "python"
else:
    try:
        from . import _ctree as kernels
        BACKEND = "cython"
    except ImportError:  # extension not built
        kernels = _pytree
        BACKEND = "python"
