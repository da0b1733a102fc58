"""Compiled inner loops."""

import numba
import numpy as np


@numba.njit(cache=True)
def delta_rule_epochs(X, d, order, w, b, eta):
    """Run the delta rule over ``order`` (one row of sample indices per epoch).

    Updates ``w`` in place and returns ``(b, epochs_done, diverged)``.
    """
    n_feat = X.shape[1]
    for e in range(order.shape[0]):
        for t in range(order.shape[1]):
            i = order[e, t]
            y = b
            for k in range(n_feat):
                y += w[k] * X[i, k]
            g = eta * (d[i] - y)
            for k in range(n_feat):
                w[k] += g * X[i, k]
            b += g
        ok = np.isfinite(b)
        for k in range(n_feat):
            ok = ok and np.isfinite(w[k])
        if not ok:
            return b, e + 1, True
    return b, order.shape[0], False
