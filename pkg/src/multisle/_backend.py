"""Select the kernel implementation at import time.

The compiled Cython module is used when it imports cleanly; otherwise the
numpy fallback.  Setting ``MULTISLE_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _fallback

DONE, NEED_NOISE, FULL, COLLISION = 0, 1, 2, 3

compiled = None
if not os.environ.get("MULTISLE_PURE_PYTHON"):
    try:
        from . import _kernels as compiled  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on the build
        compiled = None

kernels = compiled if compiled is not None else _fallback
COMPILED = compiled is not None
NAME = "cython" if COMPILED else "numpy"


def available() -> dict:
    """All importable kernel implementations, by name."""
    out = {"numpy": _fallback}
    if compiled is not None:
        out["cython"] = compiled
    return out
