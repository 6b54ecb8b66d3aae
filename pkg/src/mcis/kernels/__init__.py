"""Hot-loop kernels with a compiled core and a pure numpy fallback.

The Cython extension is used when available; set ``MCIS_PURE=1`` in the
environment to force the numpy fallback (the benchmark script uses this
to compare the two).
"""

import os

from . import pure as _pure

_impl = _pure
if not os.environ.get("MCIS_PURE"):
    try:
        from . import _fastcore as _impl  # type: ignore[no-redef]
    except ImportError:
        pass

mean_pool = _impl.mean_pool
scatter_mean_grad = _impl.scatter_mean_grad
lattice_weighted_f1 = _impl.lattice_weighted_f1


def backend_name():
    return _impl.BACKEND


__all__ = ["mean_pool", "scatter_mean_grad", "lattice_weighted_f1", "backend_name"]
