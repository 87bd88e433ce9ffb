"""Dispatch between the compiled kernels and the pure python fallback.

Set POINTCHANNELS_KERNELS=python (or =cython) to force a backend.
"""

import os

_choice = os.environ.get("POINTCHANNELS_KERNELS", "auto").lower()

if _choice == "python":
    from . import _kernels_py as _impl

    BACKEND = "python"
elif _choice == "cython":
    from . import _kernels_cy as _impl  # noqa: F401  (ImportError is the point)

    BACKEND = "cython"
else:
    try:
        from . import _kernels_cy as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

exp_smooth = _impl.exp_smooth
kp_disc = _impl.kp_disc
floquet_absdet_grid = _impl.floquet_absdet_grid
floquet_absdet_pairs = _impl.floquet_absdet_pairs


def get_backend():
    """Name of the active kernel backend ('cython' or 'python')."""
    return BACKEND
