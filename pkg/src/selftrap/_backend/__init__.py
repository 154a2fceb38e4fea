"""Backend selection: compiled extension core with pure-Python fallback.

The compiled core is used when importable.  Set ``SELFTRAP_BACKEND=pure`` to
force the fallback (e.g. for benchmarking), or ``SELFTRAP_BACKEND=compiled``
to fail loudly when the extension is missing.
"""

import os

_requested = os.environ.get("SELFTRAP_BACKEND", "").strip().lower()
if _requested not in ("", "compiled", "pure"):
    raise ImportError(
        f"SELFTRAP_BACKEND={_requested!r}: expected 'compiled' or 'pure'"
    )

if _requested == "pure":
    from . import pure as kernels
else:
    try:
        from . import _core as kernels  # type: ignore[no-redef]
    except ImportError:
        if _requested == "compiled":
            raise
        from . import pure as kernels  # type: ignore[no-redef]

BACKEND = kernels.BACKEND_NAME

__all__ = ["kernels", "BACKEND"]
