"""Backend selection for the hot Lloyd kernels.

The compiled extension is used when it imports; ``GPC_PURE_PYTHON=1``
forces the NumPy fallback. ``GPC_THREADS`` caps OpenMP threads for the
compiled path and must be set before the first import.
"""
import os

from . import _kernels_py

if os.environ.get("GPC_THREADS"):
    os.environ.setdefault("OMP_NUM_THREADS", os.environ["GPC_THREADS"])

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("GPC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # noqa: F811
        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py

sq_dists = _impl.sq_dists
assign_nearest = _impl.assign_nearest
cluster_sums = _impl.cluster_sums
