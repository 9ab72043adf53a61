"""KL proximal operators and the log-domain Dykstra barycenter solver.

All couplings are n x n* log-matrices: rows index source nodes, columns the
destination support. Exact zeros are NEG_INF and stay NEG_INF.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import lognum
from .errors import InfeasibleRow, MaxInnerIterations, ShapeMismatch
from .lognum import NEG_INF
from .measures import negative_entropy, transport_cost

log = logging.getLogger(__name__)

DEFAULT_EPS = 1e-6
DEFAULT_MAX_INNER = 50_000
# the stopping test runs after every cycle for the first CHECK_WARMUP cycles,
# then after every CHECK_STRIDE-th cycle
CHECK_WARMUP = 64
CHECK_STRIDE = 8

# cycle positions, fixed order
MARGINALS, BARYCENTER, CAPACITY, STORAGE = range(4)


def prox_marginal_rows(pi, target):
    """KL projection onto {pi 1 = target}: rescale each row to its target mass."""
    pi = np.asarray(pi, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if target.shape != (pi.shape[0],):
        raise ShapeMismatch(f"target of shape {target.shape} for {pi.shape} coupling")
    lrs = lognum.log_row_sums(pi)
    blocked = (lrs == NEG_INF) & (target > 0)
    if blocked.any():
        raise InfeasibleRow(np.flatnonzero(blocked))
    shift = np.zeros_like(lrs)
    live = target > 0
    shift[live] = np.log(target[live]) - lrs[live]
    out = lognum.broadcast_add_row(pi, shift)
    out[~live] = NEG_INF
    return out


def _column_rescale(pi, log_col_sums, log_p):
    # columns with zero mass stay zero whatever p says
    empty = log_col_sums == NEG_INF
    shift = np.where(empty, 0.0, log_p - np.where(empty, 0.0, log_col_sums))
    return lognum.broadcast_add_col(pi, shift)


def prox_barycenter_columns(pi1, pi2, omega):
    """KL_omega projection onto {pi1^T 1 = pi2^T 1 = p}.

    p is the weighted geometric mean of the two column-sum vectors, weights
    (omega, 1 - omega). Returns (pi1, pi2, log_p).
    """
    pi1 = np.asarray(pi1, dtype=np.float64)
    pi2 = np.asarray(pi2, dtype=np.float64)
    if pi1.shape != pi2.shape:
        raise ShapeMismatch(f"couplings of shapes {pi1.shape} and {pi2.shape}")
    if not 0.0 < omega < 1.0:
        raise ValueError(f"omega must lie in (0, 1), got {omega}")
    c1 = lognum.log_col_sums(pi1)
    c2 = lognum.log_col_sums(pi2)
    half_empty = (c1 == NEG_INF) != (c2 == NEG_INF)
    log_p = np.where((c1 == NEG_INF) | (c2 == NEG_INF), NEG_INF, omega * c1 + (1.0 - omega) * c2)
    if half_empty.any():
        log.debug("columns %s are empty in only one coupling; p is zero there",
                  np.flatnonzero(half_empty).tolist())
    return _column_rescale(pi1, c1, log_p), _column_rescale(pi2, c2, log_p), log_p


def half_empty_columns(pi1, pi2):
    """Columns that are zero in exactly one of the two couplings."""
    c1 = lognum.log_col_sums(pi1) == NEG_INF
    c2 = lognum.log_col_sums(pi2) == NEG_INF
    return np.flatnonzero(c1 != c2)


def prox_capacity(pi, cap):
    """KL projection onto {pi <= cap}: entrywise minimum."""
    return _prox_capacity_log(np.asarray(pi, dtype=np.float64), lognum.to_log(cap))


def _prox_capacity_log(pi, log_cap):
    return lognum.elementwise_min(pi, log_cap)


def prox_storage(pi, storage):
    """KL projection onto {pi^T 1 <= storage}: scale overfull columns down."""
    pi = np.asarray(pi, dtype=np.float64)
    return _prox_storage_log(pi, lognum.to_log(storage))


def _prox_storage_log(pi, log_storage):
    if log_storage.shape != (pi.shape[1],):
        raise ShapeMismatch(f"storage of shape {log_storage.shape} for {pi.shape} coupling")
    lcs = lognum.log_col_sums(pi)
    with np.errstate(invalid="ignore"):
        shift = np.minimum(log_storage - lcs, 0.0)
    shift[lcs == NEG_INF] = 0.0
    return lognum.broadcast_add_col(pi, shift)


@dataclass
class DykstraState:
    """Iterates of the cyclic projection: two couplings, seven corrections, log p."""

    pi1: np.ndarray
    pi2: np.ndarray
    q: list
    log_p: np.ndarray
    k: int = 0

    @classmethod
    def initial(cls, log_kernel1, log_kernel2=None):
        if log_kernel2 is None:
            log_kernel2 = log_kernel1
        shape = log_kernel1.shape
        return cls(
            pi1=np.array(log_kernel1, dtype=np.float64),
            pi2=np.array(log_kernel2, dtype=np.float64),
            q=[np.zeros(shape) for _ in range(7)],
            log_p=np.ones(shape[1]),
        )


@dataclass(frozen=True)
class BarycenterProblem:
    """Data of one constrained barycenter solve, held in the log domain."""

    log_rho: np.ndarray
    log_nu: np.ndarray
    log_cap: np.ndarray
    log_storage: np.ndarray
    omega: float

    @property
    def rho(self):
        return np.exp(self.log_rho)

    @property
    def nu(self):
        return np.exp(self.log_nu)


def _corrected(pi, q, use):
    return lognum.add(pi, q) if use else pi


def _record(q, before, after, use):
    if not use:
        return q
    return q + lognum.subtract(before, after)


def dykstra_project(state, problem, corrections=True):
    """Apply the projection for cycle position state.k mod 4 and advance k.

    With ``corrections=False`` the correction matrices are never used or
    updated, which gives plain iterative Bregman projections.
    """
    pi1, pi2, q = state.pi1, state.pi2, state.q
    step = state.k % 4
    if step == MARGINALS:
        new1 = prox_marginal_rows(_corrected(pi1, q[0], corrections), problem.rho)
        q[0] = _record(q[0], pi1, new1, corrections)
        new2 = prox_marginal_rows(_corrected(pi2, q[1], corrections), problem.nu)
        q[1] = _record(q[1], pi2, new2, corrections)
    elif step == BARYCENTER:
        new1, new2, state.log_p = prox_barycenter_columns(
            _corrected(pi1, q[2], corrections), _corrected(pi2, q[3], corrections), problem.omega)
        q[2] = _record(q[2], pi1, new1, corrections)
        q[3] = _record(q[3], pi2, new2, corrections)
    elif step == CAPACITY:
        new1 = _prox_capacity_log(_corrected(pi1, q[4], corrections), problem.log_cap)
        q[4] = _record(q[4], pi1, new1, corrections)
        new2 = pi2
    else:
        new1 = _prox_storage_log(_corrected(pi1, q[5], corrections), problem.log_storage)
        q[5] = _record(q[5], pi1, new1, corrections)
        new2 = _prox_storage_log(_corrected(pi2, q[6], corrections), problem.log_storage)
        q[6] = _record(q[6], pi2, new2, corrections)
    state.pi1, state.pi2 = new1, new2
    state.k += 1
    return state


def stopping_residuals(state, problem=None):
    """Residuals tested at the end of a cycle; matching NEG_INF entries count as 0.

    Returns (||L_p - ln(pi1^T 1)||_1, |ln(1^T pi1 1)|, row) where ``row`` is
    the L1 distance between the row sums of both couplings and their
    prescribed marginals (0 when ``problem`` is None).
    """
    lcs = lognum.log_col_sums(state.pi1)
    gap = lognum.subtract(state.log_p, lcs)
    total = lognum.log_sum_exp(lcs)
    row = 0.0
    if problem is not None:
        for pi, target in ((state.pi1, problem.log_rho), (state.pi2, problem.log_nu)):
            row += float(np.abs(np.exp(lognum.log_row_sums(pi)) - np.exp(target)).sum())
    return float(np.abs(gap).sum()), abs(total), row


@dataclass
class BarycenterResult:
    p: np.ndarray
    pi1: np.ndarray
    pi2: np.ndarray
    inner_iterations: int
    converged: bool
    log_pi1: np.ndarray = field(repr=False, default=None)
    half_empty: np.ndarray = field(repr=False, default=None)


def masked_kernel(cost, gamma, rows, log_cap=None):
    """-C/gamma with NEG_INF on rows without mass and on blocked entries."""
    kernel = -np.asarray(cost, dtype=np.float64) / gamma
    kernel[~np.asarray(rows, dtype=bool), :] = NEG_INF
    if log_cap is not None:
        kernel[log_cap == NEG_INF] = NEG_INF
    return kernel


def _segments(keys, count):
    """Start offsets of the runs of equal values in sorted ``keys``."""
    present = np.unique(keys)
    starts = np.searchsorted(keys, present)
    lengths = np.diff(np.append(starts, len(keys)))
    return present, starts, lengths


def _segment_lse(w, present, starts, lengths, count):
    out = np.full(count, NEG_INF)
    if w.size == 0:
        return out
    top = np.maximum.reduceat(w, starts)
    safe = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        out[present] = np.log(np.add.reduceat(np.exp(w - np.repeat(safe, lengths)), starts)) + safe
    return out


class _LogEntries:
    """The entries of a log-coupling that are not NEG_INF at the start.

    Entries that start at NEG_INF stay there under every projection, so only
    the others are stored, as a flat vector with row and column groupings.
    """

    def __init__(self, dense):
        self.shape = dense.shape
        self.r, self.c = np.nonzero(np.isfinite(dense))
        self.v = dense[self.r, self.c]
        self.rows = _segments(self.r, self.shape[0])
        self.col_order = np.argsort(self.c, kind="stable")
        self.cols = _segments(self.c[self.col_order], self.shape[1])

    def row_lse(self, v):
        return _segment_lse(v, *self.rows, self.shape[0])

    def col_lse(self, v):
        return _segment_lse(v[self.col_order], *self.cols, self.shape[1])

    def dense(self):
        out = np.full(self.shape, NEG_INF)
        out[self.r, self.c] = self.v
        return out


class _CompactDykstra:
    """The cycle of ``dykstra_project`` with cheaper bookkeeping.

    Produces the same iterates, but

    * only entries that can ever be nonzero are stored (rows with mass,
      admissible destinations),
    * the corrections of the marginal, barycenter and storage steps are
      constant along rows or columns, so they are stored as vectors,
    * the capacity correction lives only on entries with a finite bound,
    * projections that are exact identities (no finite capacity or storage
      bound) are skipped, their corrections staying zero.
    """

    def __init__(self, kernel1, kernel2, problem, rows1, rows2, corrections):
        self.rows1 = np.flatnonzero(rows1)
        self.rows2 = np.flatnonzero(rows2)
        self.e1 = _LogEntries(kernel1[self.rows1])
        self.e2 = _LogEntries(kernel2[self.rows2])
        self.lr1 = problem.log_rho[self.rows1]
        self.lr2 = problem.log_nu[self.rows2]
        self.omega = problem.omega
        self.use = corrections
        m = kernel1.shape[1]
        self.a1, self.a2 = np.zeros(len(self.rows1)), np.zeros(len(self.rows2))
        self.b1, self.b2 = np.zeros(m), np.zeros(m)
        self.s1, self.s2 = np.zeros(m), np.zeros(m)
        lc = problem.log_cap[self.rows1][self.e1.r, self.e1.c]
        self.cap_idx = np.flatnonzero(np.isfinite(lc))
        self.cap_val = lc[self.cap_idx]
        self.q_cap = np.zeros(self.cap_idx.size)
        self.log_storage = problem.log_storage
        self.has_storage = bool((problem.log_storage < np.inf).any())
        self.log_p = np.ones(m)

    def _rows(self, e, a, target, rows):
        x = e.v + a[e.r] if self.use else e.v
        lrs = e.row_lse(x)
        if (lrs == NEG_INF).any():
            raise InfeasibleRow(rows[lrs == NEG_INF])
        r = target - lrs
        e.v = x + r[e.r]
        return -r if self.use else a

    def _cols_storage(self, e, s):
        x = e.v + s[e.c] if self.use else e.v
        lcs = e.col_lse(x)
        with np.errstate(invalid="ignore"):
            shift = np.minimum(self.log_storage - lcs, 0.0)
        shift[lcs == NEG_INF] = 0.0
        e.v = x + shift[e.c]
        if not self.use:
            return s
        # a zero bound kills the column for good, like a dead barycenter column
        return np.where(np.isfinite(shift), -shift, 0.0)

    def cycle(self):
        e1, e2 = self.e1, self.e2
        self.a1 = self._rows(e1, self.a1, self.lr1, self.rows1)
        self.a2 = self._rows(e2, self.a2, self.lr2, self.rows2)

        x1 = e1.v + self.b1[e1.c] if self.use else e1.v
        x2 = e2.v + self.b2[e2.c] if self.use else e2.v
        c1, c2 = e1.col_lse(x1), e2.col_lse(x2)
        dead1, dead2 = c1 == NEG_INF, c2 == NEG_INF
        with np.errstate(invalid="ignore"):
            log_p = np.where(dead1 | dead2, NEG_INF, self.omega * c1 + (1.0 - self.omega) * c2)
            sh1 = np.where(dead1, 0.0, log_p - c1)
            sh2 = np.where(dead2, 0.0, log_p - c2)
        e1.v, e2.v, self.log_p = x1 + sh1[e1.c], x2 + sh2[e2.c], log_p
        if self.use:
            # a shift of NEG_INF kills the column for good; its correction no longer matters
            self.b1 = np.where(np.isfinite(sh1), -sh1, 0.0)
            self.b2 = np.where(np.isfinite(sh2), -sh2, 0.0)

        if self.cap_idx.size:
            x = e1.v[self.cap_idx] + self.q_cap if self.use else e1.v[self.cap_idx]
            new = np.minimum(x, self.cap_val)
            if self.use:
                with np.errstate(invalid="ignore"):
                    self.q_cap = np.where(x == NEG_INF, 0.0, x - new)
            e1.v[self.cap_idx] = new

        if self.has_storage:
            self.s1 = self._cols_storage(e1, self.s1)
            self.s2 = self._cols_storage(e2, self.s2)

    def residuals(self):
        lcs = self.e1.col_lse(self.e1.v)
        with np.errstate(invalid="ignore"):
            gap = self.log_p - lcs
        gap[(self.log_p == NEG_INF) & (lcs == NEG_INF)] = 0.0
        total = lognum.log_sum_exp(lcs)
        row = float(np.abs(np.exp(self.e1.row_lse(self.e1.v)) - np.exp(self.lr1)).sum())
        row += float(np.abs(np.exp(self.e2.row_lse(self.e2.v)) - np.exp(self.lr2)).sum())
        return float(np.abs(gap).sum()), abs(total), row

    def full(self, n):
        pi1 = np.full((n, self.e1.shape[1]), NEG_INF)
        pi2 = np.full((n, self.e2.shape[1]), NEG_INF)
        pi1[self.rows1] = self.e1.dense()
        pi2[self.rows2] = self.e2.dense()
        return pi1, pi2


def dykstra_barycenter_step(rho_t, nu, cost, cap=None, storage=None, *, omega, gamma,
                            eps=DEFAULT_EPS, max_inner=DEFAULT_MAX_INNER, corrections=True,
                            callback=None):
    """Constrained entropic barycenter of (rho_t, nu) with weights (omega, 1 - omega).

    ``rho_t`` and ``nu`` have length n (rows); ``cost`` and ``cap`` are n x n*
    slices over the support columns and ``storage`` has length n*. ``cap`` and
    ``storage`` default to unbounded.

    The cycle runs marginals, barycenter, capacity, storage, and convergence
    is tested at the end of a full cycle: column sums of pi1 must match p in
    log-L1, pi1 must carry unit mass, and the row sums of both couplings must
    match their marginals in L1, each within ``eps``. The returned plan gets
    one last uncorrected capacity projection so that pi1 <= cap holds
    exactly; it only lowers entries, so storage feasibility is kept.
    Non-convergence is reported through ``converged``.

    Passing ``callback`` switches to the plain matrix-correction loop of
    ``dykstra_project`` and calls ``callback(state)`` after every projection.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if not 0.0 < omega < 1.0:
        raise ValueError(f"omega must lie in (0, 1), got {omega}")
    cost = np.asarray(cost, dtype=np.float64)
    n, m = cost.shape
    rho_t = np.asarray(rho_t, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    if rho_t.shape != (n,) or nu.shape != (n,):
        raise ShapeMismatch(f"marginals must have length {n}")
    log_cap = np.full((n, m), np.inf) if cap is None else lognum.to_log(cap)
    if log_cap.shape != (n, m):
        raise ShapeMismatch(f"capacity matrix of shape {log_cap.shape}, expected {(n, m)}")
    log_storage = np.full(m, np.inf) if storage is None else lognum.to_log(storage)
    if log_storage.shape != (m,):
        raise ShapeMismatch(f"storage vector of shape {log_storage.shape}, expected {(m,)}")

    problem = BarycenterProblem(lognum.to_log(rho_t), lognum.to_log(nu), log_cap, log_storage, omega)
    kernel1 = masked_kernel(cost, gamma, rho_t > 0, log_cap)
    kernel2 = masked_kernel(cost, gamma, nu > 0)
    converged = False
    k = 0
    if callback is None:
        solver = _CompactDykstra(kernel1, kernel2, problem, rho_t > 0, nu > 0, corrections)
        while k + 4 <= max_inner:
            solver.cycle()
            k += 4
            if _check_due(k // 4) and all(r <= eps for r in solver.residuals()):
                converged = True
                break
        pi1, pi2 = solver.full(n)
        log_p = solver.log_p
    else:
        state = DykstraState.initial(kernel1, kernel2)
        while state.k < max_inner:
            step = state.k % 4
            dykstra_project(state, problem, corrections)
            callback(state)
            if step == STORAGE and _check_due(state.k // 4):
                if all(r <= eps for r in stopping_residuals(state, problem)):
                    converged = True
                    break
        pi1, pi2, log_p, k = state.pi1, state.pi2, state.log_p, state.k
    if not converged:
        log.warning("barycenter solve stopped at max_inner=%d without converging", max_inner)
    half_empty = half_empty_columns(pi1, pi2)
    if half_empty.size:
        log.warning("columns %s carry mass in only one coupling", half_empty.tolist())
    log_pi1 = _prox_capacity_log(pi1, log_cap)
    plan = np.exp(log_pi1)
    if cap is not None:
        # exp(log(c)) can land one ulp above c; clamp so the linear plan obeys cap exactly
        np.minimum(plan, cap, out=plan)
    return BarycenterResult(
        p=np.exp(log_p),
        pi1=plan,
        pi2=np.exp(pi2),
        inner_iterations=k,
        converged=converged,
        log_pi1=log_pi1,
        half_empty=half_empty,
    )


def _check_due(cycle):
    return cycle <= CHECK_WARMUP or cycle % CHECK_STRIDE == 0


def sinkhorn_distance(mu, nu, cost, gamma, eps=DEFAULT_EPS, max_inner=DEFAULT_MAX_INNER):
    """Entropic OT value <C, pi> + gamma H(pi) and its plan, by log-domain scaling."""
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    cost = np.asarray(cost, dtype=np.float64)
    if cost.shape != (mu.size, nu.size):
        raise ShapeMismatch(f"cost of shape {cost.shape} for marginals {mu.size}, {nu.size}")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    log_mu, log_nu = lognum.to_log(mu), lognum.to_log(nu)
    lp = -cost / gamma
    lp[mu == 0, :] = NEG_INF
    lp[:, nu == 0] = NEG_INF
    live_r, live_c = mu > 0, nu > 0
    for it in range(1, max_inner + 1):
        lrs = lognum.log_row_sums(lp)
        lp = lognum.broadcast_add_row(lp, np.where(live_r, log_mu - np.where(live_r, lrs, 0.0), 0.0))
        lcs = lognum.log_col_sums(lp)
        lp = lognum.broadcast_add_col(lp, np.where(live_c, log_nu - np.where(live_c, lcs, 0.0), 0.0))
        plan = np.exp(lp)
        err = np.abs(plan.sum(axis=1) - mu).sum() + np.abs(plan.sum(axis=0) - nu).sum()
        if err <= eps:
            return transport_cost(plan, cost) + gamma * negative_entropy(plan), plan
    raise MaxInnerIterations(f"sinkhorn did not reach {eps} in {max_inner} iterations")


@dataclass
class FeasibilityReport:
    """Per-node check of the sufficient conditions for the inner solver to converge."""

    outgoing_capacity: np.ndarray
    mass: np.ndarray
    storage: np.ndarray
    capacity_ok: np.ndarray
    storage_ok: np.ndarray

    @property
    def feasible(self):
        return bool(self.capacity_ok.all() and self.storage_ok.all())

    def lines(self):
        out = []
        for i in range(self.mass.size):
            flags = []
            if not self.capacity_ok[i]:
                flags.append(f"outgoing capacity {self.outgoing_capacity[i]:.6g} <= mass {self.mass[i]:.6g}")
            if not self.storage_ok[i]:
                flags.append(f"storage {self.storage[i]:.6g} <= mass {self.mass[i]:.6g} (strict inequality violated)")
            out.append(f"node {i}: " + ("ok" if not flags else "; ".join(flags)))
        return out


def feasibility_check(rho_t, cap, storage):
    """Check outgoing capacity > rho_t on nodes holding mass and storage > rho_t everywhere.

    ``rho_t`` and ``storage`` are full-length; ``cap`` has one row per node.
    """
    rho_t = np.asarray(rho_t, dtype=np.float64)
    cap = np.asarray(cap, dtype=np.float64)
    storage = np.asarray(storage, dtype=np.float64)
    if cap.shape[0] != rho_t.size or storage.shape != rho_t.shape:
        raise ShapeMismatch("rho_t, cap rows and storage must have matching lengths")
    outgoing = cap.sum(axis=1)
    capacity_ok = (outgoing > rho_t) | (rho_t == 0)
    storage_ok = storage > rho_t
    return FeasibilityReport(outgoing, rho_t, storage, capacity_ok, storage_ok)
