"""Select the compiled kernels when available.

Set ``MOSAIC_VERIFY_PURE=1`` to force the pure-Python implementations.
"""
import os

BACKEND = "python"

if not os.environ.get("MOSAIC_VERIFY_PURE"):
    try:
        from ._kernels import ipoly_eval, row_axpy  # type: ignore
        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

if BACKEND == "python":
    from ._kernels_py import ipoly_eval, row_axpy  # noqa: F811

__all__ = ["BACKEND", "ipoly_eval", "row_axpy"]
