"""Integration kernel selection.

The compiled extension is used when it imports cleanly. Setting
``STRUCTBAL_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _integrate_py

_FORCE_PY = os.environ.get("STRUCTBAL_PURE_PYTHON", "").strip() not in ("", "0")

try:
    if _FORCE_PY:
        raise ImportError("pure-python kernel forced")
    from . import _integrate_c
except ImportError:
    _integrate_c = None

BACKEND = "cython" if _integrate_c is not None else "python"


def get_kernel(backend: str = "auto"):
    """Return the ``run_kernel`` callable for ``backend``.

    ``backend`` is one of ``"auto"``, ``"cython"`` or ``"python"``.
    """
    if backend == "auto":
        backend = BACKEND
    if backend == "python":
        return _integrate_py.run_kernel
    if backend == "cython":
        if _integrate_c is None:
            raise RuntimeError("compiled kernel is not available")
        return _integrate_c.run_kernel
    raise ValueError(f"unknown backend {backend!r}")
