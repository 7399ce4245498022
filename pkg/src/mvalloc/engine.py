"""Selection between the compiled and the pure-Python search kernels.

The compiled kernels work on int64 and are picked by default when the
extension built; the Python kernels take over when it did not, when the
instance's scaled integers would not fit in int64, or when the user asks
for them (backend name, or MVALLOC_BACKEND for the "auto" resolution).
Both expose the same functions and return identical results.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable

from . import _kernels_py

try:
    from . import _kernels  # type: ignore[attr-defined]
except ImportError:
    _kernels = None

__all__ = ["Backend", "available_backends", "get_backend", "INT64_SAFE_BOUND"]

# Scaled demands, capacities and partial cost sums must stay below this
# for the compiled kernels; headroom below 2**63 keeps every addition in
# the search safely inside int64.
INT64_SAFE_BOUND = 2**62


@dataclass(frozen=True)
class Backend:
    name: str
    solve_search: Callable
    brute_search: Callable


_PYTHON = Backend(
    name="python",
    solve_search=_kernels_py.solve_search,
    brute_search=_kernels_py.brute_search,
)
_C = (
    Backend(name="c", solve_search=_kernels.solve_search, brute_search=_kernels.brute_search)
    if _kernels is not None
    else None
)


def available_backends() -> list[str]:
    return ["c", "python"] if _C is not None else ["python"]


def get_backend(name: str = "auto") -> Backend:
    """Resolve a backend name; "auto" prefers the compiled kernels.

    The MVALLOC_BACKEND environment variable overrides what "auto"
    resolves to; explicit names ignore it.
    """
    if name == "auto":
        name = os.environ.get("MVALLOC_BACKEND", "").strip() or "auto"
    if name == "auto":
        return _C if _C is not None else _PYTHON
    if name == "python":
        return _PYTHON
    if name == "c":
        if _C is None:
            raise ValueError("compiled kernels are not available in this install")
        return _C
    raise ValueError(f"unknown backend {name!r} (use auto, c or python)")
