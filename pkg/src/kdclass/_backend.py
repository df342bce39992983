"""Selects the bandwidth-shrinking backend at import time.

Set ``KDCLASS_BACKEND`` to ``compiled`` or ``numpy`` to force one; the
default (``auto``) prefers the compiled extension and silently falls back
to the numpy implementation when the extension is not built.
"""

from __future__ import annotations

import os

_choice = os.environ.get("KDCLASS_BACKEND", "auto").strip().lower() or "auto"

if _choice == "auto":
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _core_np as _impl  # type: ignore[no-redef]
elif _choice == "compiled":
    from . import _core as _impl  # type: ignore[attr-defined,no-redef]
elif _choice in ("numpy", "python"):
    from . import _core_np as _impl  # type: ignore[no-redef]
else:
    raise ImportError(
        f"KDCLASS_BACKEND={_choice!r} not recognized; use 'auto', 'compiled', or 'numpy'"
    )

local_shrink = _impl.local_shrink


def backend_name() -> str:
    """Name of the active backend: 'compiled' or 'numpy'."""
    return _impl.backend_name()
