"""Execution kernel selection.

The compiled extension is preferred when it imports; the pure Python twin
is always available.  ``AGGC_KERNEL=pure`` in the environment forces the
fallback, ``AGGC_KERNEL=cython`` makes a missing extension an error
instead of a silent downgrade.
"""

from __future__ import annotations

import os

from . import pure

_FORCED = os.environ.get("AGGC_KERNEL", "")

if _FORCED == "pure":
    _kernel = pure
elif _FORCED == "cython":
    from . import _speedups as _kernel  # type: ignore[no-redef]
else:
    try:
        from . import _speedups as _kernel  # type: ignore[no-redef]
    except ImportError:
        _kernel = pure


def get_kernel():
    """The active kernel module: run_graph, run_aggregated, KERNEL_KIND."""
    return _kernel


def set_kernel(name: str):
    """Switch kernels at runtime; returns the new active module."""
    global _kernel
    if name == "pure":
        _kernel = pure
    elif name == "cython":
        from . import _speedups
        _kernel = _speedups
    else:
        raise ValueError("unknown kernel %r (use 'pure' or 'cython')" % name)
    return _kernel


def kernel_kind() -> str:
    return _kernel.KERNEL_KIND


def available_kernels() -> tuple[str, ...]:
    try:
        from . import _speedups  # noqa: F401
    except ImportError:
        return ("pure",)
    return ("pure", "cython")
