"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``PQLIMIT_PURE_PYTHON`` is set to a non-empty value,
the numpy versions in ``_kernels_py`` are used.
"""

import os

from . import _kernels_py

if os.environ.get("PQLIMIT_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = _impl.BACKEND
ratio_powers = _impl.ratio_powers
midrange_sweep = _impl.midrange_sweep
midrange_sweep_weighted = _impl.midrange_sweep_weighted

__all__ = ["BACKEND", "ratio_powers", "midrange_sweep", "midrange_sweep_weighted", "python_backend"]

python_backend = _kernels_py
