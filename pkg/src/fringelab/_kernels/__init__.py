"""Hot per-pixel kernels with a compiled core and a numpy fallback.

The Cython extension ``_ckernels`` is used when it was built; otherwise, or
when ``FRINGELAB_PURE_PYTHON=1`` is set, the numpy versions in
``_fallback`` are used.  Both expose the same four functions.
"""
import os

from . import _fallback as fallback

compiled = None
if os.environ.get("FRINGELAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled  # type: ignore[no-redef]
    except ImportError:
        compiled = None

_impl = compiled if compiled is not None else fallback
BACKEND = "cython" if compiled is not None else "python"

wrap = _impl.wrap
wrap_vector = _impl.wrap_vector
bilinear_periodic = _impl.bilinear_periodic
wrapped_gradient = _impl.wrapped_gradient

__all__ = ["BACKEND", "bilinear_periodic", "compiled", "fallback", "wrap", "wrap_vector", "wrapped_gradient"]
