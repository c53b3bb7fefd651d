"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback is used. Setting ``RBCX_PURE_PYTHON=1`` forces the fallback.
"""

import os
from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def get_backend(name: str | None = None) -> ModuleType:
    """Return a kernel module by name, or the default one for ``None``."""
    if name is None:
        return _default
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown kernel backend {name!r}; available: {available_backends()}"
        ) from None


def _pick_default() -> ModuleType:
    if os.environ.get("RBCX_PURE_PYTHON", "").strip() not in ("", "0"):
        return _pykernels
    return _ckernels if _ckernels is not None else _pykernels


_default = _pick_default()
BACKEND: str = _default.NAME

radon_splat = _default.radon_splat
hamming_scan = _default.hamming_scan
l1_scan = _default.l1_scan
shifted_l1 = _default.shifted_l1
lbp_codes = _default.lbp_codes
