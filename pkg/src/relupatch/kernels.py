"""Kernel dispatch: compiled extension when built, numpy fallback otherwise.

``patch_matrix(X, V, L, b, c, r)`` evaluates every scaled local patch at
every sample point; it dominates runtime inside fitting and Monte Carlo
estimation, hence the compiled variant. ``benchmarks/bench_kernels.py``
compares the two.
"""

import numpy as np

from . import _kernels_py

patch_matrix_numpy = _kernels_py.patch_matrix

try:
    from . import _kernels as _ext

    def patch_matrix_compiled(X, V, L, b, c, r):
        return _ext.patch_matrix(
            np.ascontiguousarray(X, dtype=float),
            np.ascontiguousarray(V, dtype=float),
            np.ascontiguousarray(L, dtype=float),
            np.ascontiguousarray(b, dtype=float),
            np.ascontiguousarray(c, dtype=float),
            np.ascontiguousarray(r, dtype=float),
        )

    HAVE_COMPILED = True
except ImportError:  # extension not built; pure-python install
    patch_matrix_compiled = None
    HAVE_COMPILED = False

patch_matrix = patch_matrix_compiled if HAVE_COMPILED else patch_matrix_numpy
