"""Inner kernels of the add/delete moves.

Every kernel exists twice: a version compiled with numba and a vectorized
numpy version. The public names bind to the numba versions unless
numba is missing or ``WAVSHRINK_DISABLE_NUMBA`` is set. Both versions stay
importable under ``*_jit`` / ``*_numpy`` for tests and benchmarks.
"""

import numpy as np

from ._accel import NUMBA_ENABLED, njit

# ---------------------------------------------------------------------------
# grow: prepend one coordinate to a covariance matrix
# ---------------------------------------------------------------------------


def grow_cov_numpy(S, hv, s):
    q = S.shape[0]
    out = np.empty((q + 1, q + 1))
    out[0, 0] = 1.0 / s
    out[0, 1:] = -hv / s
    out[1:, 0] = -hv / s
    out[1:, 1:] = S + np.outer(hv, hv) / s
    return out


@njit(cache=True)
def grow_cov_jit(S, hv, s):
    q = S.shape[0]
    out = np.empty((q + 1, q + 1))
    inv = 1.0 / s
    out[0, 0] = inv
    for i in range(q):
        a = -hv[i] * inv
        out[0, i + 1] = a
        out[i + 1, 0] = a
        for j in range(q):
            out[i + 1, j + 1] = S[i, j] + hv[i] * hv[j] * inv
    return out


def grow_factor_numpy(T, w):
    q = T.shape[0]
    out = np.zeros((q + 1, q + 1))
    out[:, 0] = w
    out[1:, 1:] = T
    return out


@njit(cache=True)
def grow_factor_jit(T, w):
    q = T.shape[0]
    out = np.zeros((q + 1, q + 1))
    out[0, 0] = w[0]
    for i in range(q):
        out[i + 1, 0] = w[i + 1]
        for j in range(i + 1):
            out[i + 1, j + 1] = T[i, j]
    return out


# ---------------------------------------------------------------------------
# shrink: condition a covariance on one coordinate and drop it
# ---------------------------------------------------------------------------


def shrink_cov_numpy(S, l):
    col = np.delete(S[:, l], l)
    rest = np.delete(np.delete(S, l, axis=0), l, axis=1)
    return rest - np.outer(col, col) / S[l, l]


@njit(cache=True)
def shrink_cov_jit(S, l):
    q = S.shape[0]
    out = np.empty((q - 1, q - 1))
    piv = S[l, l]
    ii = 0
    for i in range(q):
        if i == l:
            continue
        a = S[i, l] / piv
        jj = 0
        for j in range(q):
            if j == l:
                continue
            out[ii, jj] = S[i, j] - a * S[l, j]
            jj += 1
        ii += 1
    return out


# ---------------------------------------------------------------------------
# drop_factor: Cholesky factor of the conditional covariance after removing
# coordinate l, by plane rotations
# ---------------------------------------------------------------------------
#
# With row l of T moved to the top, column rotations (k-1, k) for k = l..1
# push that row into its first entry. The trailing block is then the lower
# factor of Sigma_(-l) - s s' / Sigma_ll. Columns are sign-normalized so the
# diagonal is positive, which makes the result the unique Cholesky factor.


def drop_factor_numpy(T, l):
    q = T.shape[0]
    order = np.concatenate(([l], np.arange(l), np.arange(l + 1, q)))
    M = T[order].copy()
    for k in range(l, 0, -1):
        a = M[0, k - 1]
        b = M[0, k]
        if b == 0.0:
            continue
        r = np.hypot(a, b)
        c, s = a / r, b / r
        rows = np.r_[0, k:q]
        x = M[rows, k - 1]
        y = M[rows, k]
        M[rows, k - 1] = c * x + s * y
        M[rows, k] = -s * x + c * y
        M[0, k] = 0.0
    R = M[1:, 1:]
    neg = np.diag(R) < 0
    R[:, neg] *= -1.0
    return np.tril(R)


@njit(cache=True)
def drop_factor_jit(T, l):
    q = T.shape[0]
    M = np.empty((q, q))
    for j in range(q):
        M[0, j] = T[l, j]
    r_ = 1
    for i in range(q):
        if i == l:
            continue
        for j in range(q):
            M[r_, j] = T[i, j]
        r_ += 1
    for k in range(l, 0, -1):
        a = M[0, k - 1]
        b = M[0, k]
        if b == 0.0:
            continue
        r = np.hypot(a, b)
        c = a / r
        s = b / r
        M[0, k - 1] = r
        M[0, k] = 0.0
        for i in range(k, q):
            x = M[i, k - 1]
            y = M[i, k]
            M[i, k - 1] = c * x + s * y
            M[i, k] = -s * x + c * y
    R = np.zeros((q - 1, q - 1))
    for j in range(q - 1):
        sign = 1.0 if M[j + 1, j + 1] >= 0.0 else -1.0
        for i in range(j, q - 1):
            R[i, j] = sign * M[i + 1, j + 1]
    return R


# ---------------------------------------------------------------------------
# probe: cheap O(q^2) check that T T' reproduces Sigma
# ---------------------------------------------------------------------------


def factor_residual_numpy(T, S, z):
    return np.max(np.abs(T @ (T.T @ z) - S @ z))


@njit(cache=True)
def factor_residual_jit(T, S, z):
    # both products are matrix-vector, so BLAS through np.dot wins
    u = np.dot(T.T, z)
    r = np.dot(T, u) - np.dot(S, z)
    return np.max(np.abs(r))


if NUMBA_ENABLED:
    grow_cov = grow_cov_jit
    grow_factor = grow_factor_jit
    shrink_cov = shrink_cov_jit
    drop_factor = drop_factor_jit
    factor_residual = factor_residual_jit
else:
    grow_cov = grow_cov_numpy
    grow_factor = grow_factor_numpy
    shrink_cov = shrink_cov_numpy
    drop_factor = drop_factor_numpy
    factor_residual = factor_residual_numpy

BACKEND = "numba" if NUMBA_ENABLED else "numpy"
