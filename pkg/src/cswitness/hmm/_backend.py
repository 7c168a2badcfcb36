"""Select the forward-backward implementation at import time.

The compiled kernel is used when it was built; set ``CSWITNESS_PURE=1`` to
force the numpy fallback.
"""

import os

from . import _fallback

if os.environ.get("CSWITNESS_PURE"):
    kernel = _fallback
else:
    try:
        from . import _kernels as kernel
    except ImportError:  # extension not built
        kernel = _fallback

BACKEND = kernel.NAME
