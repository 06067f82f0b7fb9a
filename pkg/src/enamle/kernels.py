"""Backend selection for the tree kernels.

The compiled module is used when it imports; set ``ENAMLE_PURE_PYTHON=1`` to
force the numpy fallback.
"""

import os

from . import _kernels_py

if os.environ.get("ENAMLE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"
best_split = _impl.best_split
tree_apply = _impl.tree_apply
