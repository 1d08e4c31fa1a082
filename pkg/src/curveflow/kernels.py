"""Kernel backend selection.

The compiled extension is used when it imports; setting the environment
variable ``CURVEFLOW_PURE=1`` forces the pure-Python fallback.
"""
import os

if os.environ.get("CURVEFLOW_PURE", "") not in ("", "0"):
    from ._kernels_py import BACKEND, partition_elements
else:
    try:
        from ._kernels import BACKEND, partition_elements
    except ImportError:  # extension not built
        from ._kernels_py import BACKEND, partition_elements

__all__ = ["BACKEND", "partition_elements"]
