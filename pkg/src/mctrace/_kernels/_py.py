"""Pure-numpy fallback implementations of the hot kernels.

Semantics match ``mctrace._kernels._core`` (the Cython build); only
floating-point rounding of dot products may differ in the last bits
because numpy delegates them to BLAS.
"""

import numpy as np


def cd_sweep(X, col_sq, denom, l1, r, beta, coords):
    """One cyclic coordinate-descent sweep on the curvature-1/4 surrogate.

    Parameters
    ----------
    X : (n, p) float64, Fortran order
        Design matrix.
    col_sq : (p,) float64
        Per-column sums of squares (precomputed once per design).
    denom : (p,) float64
        Per-coordinate curvature ``0.25 * col_sq + l2``.
    l1 : (p,) float64
        Per-coordinate soft-threshold level (absolute units).
    r : (n,) float64
        Residual ``z - intercept - X @ beta``, updated in place.
    beta : (p,) float64
        Coefficients, updated in place.
    coords : (k,) int64
        Coordinate visit order.

    Returns
    -------
    float
        Largest absolute coefficient change over the sweep.
    """
    max_delta = 0.0
    for j in coords:
        xj = X[:, j]
        b_old = beta[j]
        g = 0.25 * (xj @ r + col_sq[j] * b_old)
        hi = g - l1[j]
        lo = g + l1[j]
        if hi > 0.0:
            b_new = hi / denom[j]
        elif lo < 0.0:
            b_new = lo / denom[j]
        else:
            b_new = 0.0
        if b_new != b_old:
            r += xj * (b_old - b_new)
            beta[j] = b_new
            delta = abs(b_new - b_old)
            if delta > max_delta:
                max_delta = delta
    return max_delta


def eval_terms(X, s_idx, t_idx, hinge, knots, coefs):
    """Accumulate sparse spline-term contributions for a block of rows.

    ``X`` is (R, d) standardized features.  Term k reads columns
    ``s_idx[k]`` and ``t_idx[k]`` (equal for main effects), applies the
    hinge ``max(u - knots[k], 0)`` when ``hinge[k]`` and the identity
    otherwise, and adds ``coefs[k]`` times the result.  Returns the
    (R,) linear predictor without the intercept.
    """
    R = X.shape[0]
    eta = np.zeros(R)
    for k in range(len(coefs)):
        s = s_idx[k]
        t = t_idx[k]
        u = X[:, s] if s == t else X[:, s] * X[:, t]
        if hinge[k]:
            u = np.maximum(u - knots[k], 0.0)
        eta += coefs[k] * u
    return eta


def walk_chain(choices, start):
    """Walk a Markov chain over pre-sampled per-state successor tables.

    ``choices`` is (m-1, c): row i gives, for every possible current
    state, the next state at step i.  Returns the (m,) state path
    beginning at ``start``.
    """
    m = choices.shape[0] + 1
    states = np.empty(m, dtype=np.int64)
    s = int(start)
    states[0] = s
    for i in range(1, m):
        s = int(choices[i - 1, s])
        states[i] = s
    return states
