"""Hot-kernel backend selection.

Imports the compiled extension when available, otherwise the numpy
reference implementation. Set EVSEG_BACKEND=python or EVSEG_BACKEND=compiled
to force one side (the latter raises if the extension was not built).
"""

import os

from . import reference

_requested = os.environ.get("EVSEG_BACKEND", "auto")

if _requested == "python":
    _impl = reference
elif _requested == "compiled":
    from . import _core as _impl
elif _requested == "auto":
    try:
        from . import _core as _impl
    except ImportError:
        _impl = reference
else:
    raise RuntimeError(f"EVSEG_BACKEND must be auto, python or compiled, got {_requested!r}")

BACKEND = _impl.BACKEND_NAME
accumulate = _impl.accumulate
gradient_loss = _impl.gradient_loss


def available_backends():
    """Names of the importable backends, compiled first when present."""
    names = []
    try:
        from . import _core  # noqa: F401
        names.append("compiled")
    except ImportError:
        pass
    names.append("python")
    return names


def get_backend(name):
    """Fetch one backend module by name ('compiled' or 'python')."""
    if name == "python":
        return reference
    if name == "compiled":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {name!r}")
