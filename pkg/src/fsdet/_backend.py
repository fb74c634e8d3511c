"""Select the replication kernel at import.

The compiled kernel is preferred; set ``FSDET_PURE_PYTHON=1`` to force the
numpy fallback.
"""

import os

from . import _kernels_py

KERNELS = {"python": _kernels_py.accumulate}

try:
    from ._kernels import accumulate as _compiled_accumulate
except ImportError:  # extension not built
    pass
else:
    KERNELS["cython"] = _compiled_accumulate

if os.environ.get("FSDET_PURE_PYTHON") == "1" or "cython" not in KERNELS:
    DEFAULT_BACKEND = "python"
else:
    DEFAULT_BACKEND = "cython"


def available_backends() -> list[str]:
    return sorted(KERNELS)


def get_kernel(name: str | None = None):
    name = DEFAULT_BACKEND if name is None else name
    try:
        return name, KERNELS[name]
    except KeyError:
        raise ValueError(
            f"backend {name!r} unavailable; choose from {available_backends()}"
        ) from None
