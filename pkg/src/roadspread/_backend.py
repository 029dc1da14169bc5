"""Select the numerical backend at import time.

The compiled extension is used when it imports; otherwise the pure-Python
fallback is used. Set ``ROADSPREAD_BACKEND`` to ``python`` or ``compiled`` to
force a choice (``compiled`` raises if the extension is missing).
"""

from __future__ import annotations

import os

from . import _fallback


def _load():
    choice = os.environ.get("ROADSPREAD_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "python", "compiled"):
        raise ImportError(f"ROADSPREAD_BACKEND must be auto, python or compiled, got {choice!r}")
    if choice == "python":
        return _fallback, "python"
    try:
        from . import _core
    except ImportError:
        if choice == "compiled":
            raise
        return _fallback, "python"
    return _core, "compiled"


_impl, BACKEND = _load()

tridiag_solve = _impl.tridiag_solve
euler_step = _impl.euler_step


def available_backends() -> dict:
    """Return every importable backend keyed by name."""
    out = {"python": _fallback}
    try:
        from . import _core
    except ImportError:
        pass
    else:
        out["compiled"] = _core
    return out
