"""The oracles themselves, checked against a generic LP solver."""

import json

import numpy as np
import pytest
from scipy.optimize import linprog

from conftest import CORPUS
from oracles import floyd_warshall, step_lp_by_vertices


def corpus_lp(path):
    data = json.loads(path.read_text())
    g = data["graph"]
    n = g["n"]
    edges = [tuple(e) for e in g["edges"]]
    if g.get("undirected"):
        edges += [(e[1], e[0], *e[2:]) for e in edges]
    cap = np.full((n, n), np.inf)
    allowed = np.eye(n, dtype=bool)
    for s, t, w, c in edges:
        allowed[s, t] = True
        cap[s, t] = np.inf if c is None else c
    storage = np.array([np.inf if s is None else s for s in g.get("storage", [None] * n)])
    return (floyd_warshall(n, edges), np.array(data["rho0"], float), np.array(data["nu"], float),
            allowed, cap, storage, float(data["omega"]))


def scipy_step_lp(cost, rho, nu, allowed, cap, storage, omega):
    n = len(rho)
    nv = 2 * n * n
    c = np.r_[omega * cost.ravel(), (1 - omega) * cost.ravel()]
    a_eq, b_eq = [], []
    for i in range(n):
        r = np.zeros(nv)
        r[i * n:(i + 1) * n] = 1
        a_eq.append(r)
        b_eq.append(rho[i])
        r = np.zeros(nv)
        r[n * n + i * n:n * n + (i + 1) * n] = 1
        a_eq.append(r)
        b_eq.append(nu[i])
    for j in range(n):
        r = np.zeros(nv)
        r[j:n * n:n] = 1
        r[n * n + j::n] = -1
        a_eq.append(r)
        b_eq.append(0.0)
    a_ub, b_ub = [], []
    for j in range(n):
        if np.isfinite(storage[j]):
            r = np.zeros(nv)
            r[j:n * n:n] = 1
            a_ub.append(r)
            b_ub.append(storage[j])
    bounds = [(0, 0) if not allowed[i, j] else (0, None if np.isinf(cap[i, j]) else cap[i, j])
              for i in range(n) for j in range(n)] + [(0, None)] * (n * n)
    res = linprog(c, A_ub=np.array(a_ub) if a_ub else None, b_ub=b_ub or None,
                  A_eq=np.array(a_eq), b_eq=b_eq, bounds=bounds, method="highs")
    assert res.status == 0
    return res.fun


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.json")), ids=lambda p: p.stem)
def test_vertex_enumeration_matches_linprog(path):
    args = corpus_lp(path)
    val, pi1, pi2 = step_lp_by_vertices(*args)
    assert val == pytest.approx(scipy_step_lp(*args), abs=1e-9)
    cost, rho, nu, allowed, cap, storage, omega = args
    np.testing.assert_allclose(pi1.sum(1), rho, atol=1e-9)
    np.testing.assert_allclose(pi2.sum(1), nu, atol=1e-9)
    np.testing.assert_allclose(pi1.sum(0), pi2.sum(0), atol=1e-9)
    assert np.all(pi1 <= cap + 1e-9) and np.all(pi1[~allowed] == 0)
