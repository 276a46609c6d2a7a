"""Kernel backend selection.

Imports the compiled extension when present, otherwise the numpy fallback.
``VDMFPCA_BACKEND`` overrides the choice: ``cython`` (fail if missing),
``python`` (force the fallback), or ``auto`` (default).
"""

import os

from . import _pure

_choice = os.environ.get("VDMFPCA_BACKEND", "auto").lower()

if _choice == "python":
    _impl = _pure
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        if _choice == "cython":
            raise
        _impl = _pure

BACKEND = _impl.BACKEND_NAME
bspline_local = _impl.bspline_local
accumulate_normal_equations = _impl.accumulate_normal_equations

__all__ = ["BACKEND", "bspline_local", "accumulate_normal_equations"]
