"""Hot-loop kernels with a compiled backend and a numpy/scipy fallback.

The Cython module ``_ckernels`` is used when it was built; otherwise, or when
``AUGURY_PURE_PYTHON`` is set in the environment, the functions come from
``_pykernels``. ``BACKEND`` names the active implementation.
"""
import os

import numpy as np

from . import _pykernels

_compiled = None
if not os.environ.get("AUGURY_PURE_PYTHON"):
    try:
        from . import _ckernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

_impl = _compiled if _compiled is not None else _pykernels
BACKEND = "cython" if _compiled is not None else "python"


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def trailing_ma(values, n, decay=1.0):
    """Trailing weighted mean over windows of ``n`` points.

    Weight of the observation ``k`` lags back is ``decay**k``; ``decay=1``
    gives the uniform mean. Entries before index ``n-1`` and windows holding
    a NaN come back as NaN.
    """
    return _impl.trailing_ma(_f64(values), int(n), float(decay))


def count_outside_band(values, center, halfwidth):
    """Return ``(above, below)`` counts of points outside ``center +- halfwidth``."""
    return _impl.count_outside_band(_f64(values), _f64(center), float(halfwidth))


def arma_innovations(u, theta):
    """All-pole filter ``e[t] = u[t] - sum_j theta[j-1] * e[t-j]`` from rest."""
    return _impl.arma_innovations(_f64(u), _f64(theta))
