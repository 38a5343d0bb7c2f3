"""Kernel backend selection.

The compiled extension is preferred when importable; set
``AIRTWIN_KERNEL=pure`` (or ``fast``) to force a backend. Both expose the
same ``BlipIntegrator`` contract and produce bit-identical results.
"""

import os

from . import pure

_forced = os.environ.get("AIRTWIN_KERNEL", "").strip().lower()

if _forced == "pure":
    _impl = pure
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]
    except ImportError:
        if _forced == "fast":
            raise ImportError(
                "AIRTWIN_KERNEL=fast but the compiled kernel is not built; "
                "reinstall the package or unset the variable"
            )
        _impl = pure

BACKEND = _impl.BACKEND
BlipIntegrator = _impl.BlipIntegrator


def available_backends() -> dict:
    """Backend name -> BlipIntegrator class for every importable kernel."""
    found = {"pure": pure.BlipIntegrator}
    try:
        from . import _fast

        found["fast"] = _fast.BlipIntegrator
    except ImportError:
        pass
    return found
