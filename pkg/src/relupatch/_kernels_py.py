"""Pure-numpy implementation of the hot kernel; import-time fallback."""

import numpy as np


def patch_matrix(X, V, L, b, c, r):
    """Dense patch design matrix, G[s, i] = c_i g_i(x_s) masked to the ball."""
    X = np.ascontiguousarray(X, dtype=float)
    V = np.ascontiguousarray(V, dtype=float)
    L = np.ascontiguousarray(L, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    r = np.asarray(r, dtype=float)
    d2 = (
        np.sum(X * X, axis=1)[:, None]
        - 2.0 * (X @ V.T)
        + np.sum(V * V, axis=1)[None, :]
    )
    G = (X @ L.T + b) * c
    G[d2 > r * r] = 0.0
    return G
