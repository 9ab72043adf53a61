"""Probability vectors on nodes and the divergences used for reporting."""

import numpy as np

from .errors import ConfigError, LengthMismatch, NonpositiveReference, ShapeMismatch

SIMPLEX_TOL = 1e-9


def as_measure(values, n=None, tol=SIMPLEX_TOL):
    """Validate and return a full-length probability vector as a float array.

    Inputs that miss the simplex by more than ``tol`` are rejected, never
    renormalized.
    """
    v = np.array(values, dtype=np.float64)
    if v.ndim != 1:
        raise ConfigError("measure must be a flat list of numbers")
    if n is not None and v.size != n:
        raise ConfigError(f"measure has length {v.size}, graph has {n} nodes")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise ConfigError("simplex violation: measure entries must be finite and nonnegative")
    total = v.sum()
    if abs(total - 1.0) > tol:
        raise ConfigError(f"simplex violation: measure sums to {total!r}, expected 1")
    v.setflags(write=False)
    return v


def tv_distance(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths {a.shape} and {b.shape} differ")
    return 0.5 * float(np.abs(a - b).sum())


def _xlogx_terms(pi):
    # 0 * ln 0 = 0
    out = np.zeros_like(pi)
    pos = pi > 0
    out[pos] = pi[pos] * np.log(pi[pos])
    return out


def kl_divergence(pi, xi):
    """Generalized KL: sum pi*ln(pi/xi) - pi + xi."""
    pi = np.asarray(pi, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    if pi.shape != xi.shape:
        raise ShapeMismatch(f"shapes {pi.shape} and {xi.shape} differ")
    if np.any(xi <= 0):
        raise NonpositiveReference("reference matrix must be strictly positive")
    pos = pi > 0
    cross = np.zeros_like(pi)
    cross[pos] = pi[pos] * np.log(xi[pos])
    return float(np.sum(_xlogx_terms(pi) - cross - pi + xi))


def negative_entropy(pi):
    """H(pi) = sum pi (ln pi - 1)."""
    pi = np.asarray(pi, dtype=np.float64)
    return float(np.sum(_xlogx_terms(pi) - pi))


def transport_cost(pi, cost):
    pi = np.asarray(pi, dtype=np.float64)
    cost = np.asarray(cost, dtype=np.float64)
    if pi.shape != cost.shape:
        raise ShapeMismatch(f"shapes {pi.shape} and {cost.shape} differ")
    pos = pi > 0
    return float(np.sum(pi[pos] * cost[pos]))
