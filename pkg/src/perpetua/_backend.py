"""Select the kernel implementation at import.

The compiled module is used when it was built; ``PERPETUA_PURE_PYTHON=1``
forces the numpy fallback.
"""

import os

if os.environ.get("PERPETUA_PURE_PYTHON") == "1":
    from . import _pykernels as kernels
else:
    try:
        from . import _ckernels as kernels
    except ImportError:
        from . import _pykernels as kernels

BACKEND = kernels.BACKEND
