"""Hot-loop kernels, backed by the compiled ``_kernels`` extension when it is
built and by ``_kernels_py`` otherwise.

Set ``MALBARCODE_PURE_PYTHON=1`` to force the fallback.
"""

import os

if os.environ.get("MALBARCODE_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = "cython" if _impl.__name__.endswith("._kernels") else "python"

qr_penalty = _impl.qr_penalty
build_tree = _impl.build_tree
smo_solve = _impl.smo_solve
