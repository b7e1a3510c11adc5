"""Backend selection for the hot kernels.

The compiled module is used when it imports; set ``PHYSIOTRUST_PURE_PYTHON=1``
to force the numpy fallback.  Both expose identical functions.
"""

import os

from . import _fallback

fallback = _fallback

try:
    from . import _core as compiled
except ImportError:
    compiled = None

if compiled is not None and not os.environ.get("PHYSIOTRUST_PURE_PYTHON"):
    active = compiled
else:
    active = _fallback

BACKEND = active.BACKEND


def available():
    """All importable backends, compiled first."""
    return [m for m in (compiled, _fallback) if m is not None]


def __getattr__(name):
    return getattr(active, name)
