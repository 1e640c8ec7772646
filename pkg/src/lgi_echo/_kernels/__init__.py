"""Kernel backend selection.

Imports the compiled extension when present, otherwise the numpy
fallback.  Set LGI_ECHO_FORCE_FALLBACK=1 to skip the extension even
when it is installed (useful for benchmarking and for reproducing the
pure-Python behavior).  The chosen backend is reported in BACKEND.
"""

import os

from . import _fallback

if os.environ.get("LGI_ECHO_FORCE_FALLBACK", "") not in ("", "0"):
    _impl = _fallback
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fallback

BACKEND = _impl.BACKEND_NAME
dipole_intensity = _impl.dipole_intensity
fold_coincidences = _impl.fold_coincidences

__all__ = ["BACKEND", "dipole_intensity", "fold_coincidences"]
