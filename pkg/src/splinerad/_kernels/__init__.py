"""Hot kernels: compiled Cython core with a NumPy fallback chosen at import.

Set ``SPLINERAD_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels as python_backend

compiled_backend = None
if os.environ.get("SPLINERAD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:
        compiled_backend = None

_impl = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

de_casteljau = _impl.de_casteljau
polyline_self_intersects = _impl.polyline_self_intersects
gauss_corr = _impl.gauss_corr
array_factor = _impl.array_factor

__all__ = ["BACKEND", "de_casteljau", "polyline_self_intersects", "gauss_corr",
           "array_factor", "python_backend", "compiled_backend"]
