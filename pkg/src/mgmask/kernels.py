"""Hot-kernel backend selection.

Prefers the compiled extension and falls back to the numpy/pure-Python
implementations when it is missing.  Set ``MGMASK_PURE_PYTHON=1`` to force
the fallback (used by the benchmark and the backend-equivalence tests).
"""

import os

from . import _kernels_py

if os.environ.get("MGMASK_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

sad_search = _impl.sad_search
shuffle_prefix = _impl.shuffle_prefix
