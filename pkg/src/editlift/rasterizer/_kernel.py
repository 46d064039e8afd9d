"""Compositing kernel selection: compiled extension when available, numpy otherwise.

Set EDITLIFT_NO_EXT=1 to force the pure-python kernel.
"""

from __future__ import annotations

import os

if os.environ.get("EDITLIFT_NO_EXT"):
    from ._compose_py import compose_tile

    kernel_name = "python"
else:
    try:
        from ._compose_cy import compose_tile  # type: ignore[no-redef]

        kernel_name = "cython"
    except ImportError:
        from ._compose_py import compose_tile  # type: ignore[no-redef]

        kernel_name = "python"

__all__ = ["compose_tile", "kernel_name"]
