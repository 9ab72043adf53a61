"""Log-domain matrix arithmetic.

Matrices are plain float64 arrays holding natural logarithms. An exact zero
in the linear domain is stored as ``NEG_INF`` and is absorbing under
multiplication (log-domain addition).
"""

import numpy as np

from .errors import EmptyInput, ShapeMismatch

NEG_INF = -np.inf


def to_log(x):
    """Elementwise natural log with exact zeros mapped to NEG_INF."""
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.log(x)


def to_linear(m):
    return np.exp(np.asarray(m, dtype=np.float64))


def log_sum_exp(values):
    """ln(sum(exp(values))) pivoted on the largest term.

    Uses ln(a_0) + ln(1 + sum_{i>0} exp(ln a_i - ln a_0)) with a_0 the
    maximum, so a single finite term is returned unchanged.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise EmptyInput("log_sum_exp of an empty sequence")
    i0 = int(np.argmax(v))
    top = v[i0]
    if top == NEG_INF:
        return NEG_INF
    rest = np.delete(v, i0)
    return float(top + np.log1p(np.sum(np.exp(rest - top))))


def _lse_axis(m, axis):
    m = np.asarray(m, dtype=np.float64)
    top = np.max(m, axis=axis, keepdims=True)
    # rows/cols that are entirely NEG_INF keep a pivot of 0 to avoid inf - inf
    safe = top if np.isfinite(top).all() else np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(m - safe), axis=axis)) + np.squeeze(safe, axis=axis)
    return out


def log_row_sums(m):
    """Log of the row sums of exp(m); an all-NEG_INF row gives NEG_INF."""
    return _lse_axis(m, 1)


def log_col_sums(m):
    return _lse_axis(m, 0)


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes {a.shape} and {b.shape} differ")


def add(a, b):
    """Log-domain entrywise product; NEG_INF absorbs anything, including +inf."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_same_shape(a, b)
    with np.errstate(invalid="ignore"):
        out = a + b
    # -inf + inf is the only sum that yields nan
    out[np.isnan(out)] = NEG_INF
    return out


def subtract(a, b):
    """Log-domain entrywise ratio a/b with the convention 0/0 = 1."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_same_shape(a, b)
    with np.errstate(invalid="ignore"):
        out = a - b
    out[(a == NEG_INF) & (b == NEG_INF)] = 0.0
    return out


def broadcast_add_row(m, v):
    """Add v[i] to every entry of row i (scale rows by exp(v))."""
    m = np.asarray(m, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (m.shape[0],):
        raise ShapeMismatch(f"row vector of length {v.shape} for matrix {m.shape}")
    return add(m, np.broadcast_to(v[:, None], m.shape))


def broadcast_add_col(m, v):
    """Add v[j] to every entry of column j (scale columns by exp(v))."""
    m = np.asarray(m, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (m.shape[1],):
        raise ShapeMismatch(f"column vector of length {v.shape} for matrix {m.shape}")
    return add(m, np.broadcast_to(v[None, :], m.shape))


def elementwise_min(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_same_shape(a, b)
    return np.minimum(a, b)
