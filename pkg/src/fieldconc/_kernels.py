"""Backend selection for the batch order kernels.

The compiled extension is used when it imports; setting
``FIELDCONC_PURE=1`` forces the numpy fallback.
"""
import os

from fieldconc import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("FIELDCONC_PURE", "") not in ("1", "true", "yes"):
    try:
        from fieldconc import _ckernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def backends():
    """Available kernel modules by name (fallback always present)."""
    out = {"python": _pykernels}
    try:
        from fieldconc import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out


kappa_many = _impl.kappa_many
compare_many = _impl.compare_many
compare_to = _impl.compare_to
compare_matrix = _impl.compare_matrix
separation_scan = _impl.separation_scan
