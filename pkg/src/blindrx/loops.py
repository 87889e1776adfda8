"""Backend selection for the sequential loop kernels.

The compiled extension is used when it imports; set ``BLINDRX_BACKEND=python``
to force the pure-Python reference.
"""
import os

from . import _loops_py

BACKEND = "python"
gardner_core = _loops_py.gardner_core
costas_core = _loops_py.costas_core

if os.environ.get("BLINDRX_BACKEND", "").lower() != "python":
    try:
        from . import _loops as _compiled
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        gardner_core = _compiled.gardner_core
        costas_core = _compiled.costas_core


def available_backends() -> dict:
    backends = {"python": _loops_py}
    try:
        from . import _loops as _compiled
    except ImportError:
        pass
    else:
        backends["cython"] = _compiled
    return backends
