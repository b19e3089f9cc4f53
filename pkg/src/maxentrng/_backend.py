"""Pick the compiled kernels when available, else the pure-Python twin.

Set ``MAXENTRNG_PURE=1`` to force the fallback.
"""
import os

if os.environ.get("MAXENTRNG_PURE", "") not in ("", "0"):
    from . import _pycore as core
else:
    try:
        from . import _core as core
    except ImportError:  # extension not built
        from . import _pycore as core

BACKEND = core.BACKEND


def compiled_available() -> bool:
    try:
        from . import _core  # noqa: F401
    except ImportError:
        return False
    return True
