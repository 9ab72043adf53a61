"""Built-in experiment instances, returned as run-spec dictionaries."""

import numpy as np

from .errors import ConfigError, UnknownKind

KINDS = ("star", "path", "grid", "cycle", "two_path", "small_dwn", "random")


def _spec(name, graph, rho0, nu, note="", **extra):
    spec = {
        "name": name,
        "graph": graph,
        "rho0": [float(x) for x in rho0],
        "nu": [float(x) for x in nu],
        "omega": 0.1,
        "gamma": 1e-3,
        "eps_outer": 1e-3,
        "eps_inner": 1e-6,
        "max_outer": 500,
        "max_inner": 50_000,
        "events": [],
        "output": f"runs/{name}",
        "emit": {"trace_csv": True, "snapshots_json": True, "sinkhorn_costs": False},
    }
    if note:
        spec["note"] = note
    spec.update(extra)
    return spec


def _undirected(n, pairs, weight=1.0, capacity=None, storage=None):
    return {
        "n": n,
        "undirected": True,
        "edges": [[int(p[0]), int(p[1]), float(p[2]) if len(p) > 2 else weight, capacity]
                  for p in pairs],
        "storage": storage if storage is not None else [None] * n,
    }


def _random_supports(n, rng):
    """Half the nodes (at random) carry rho0, the rest carry nu; masses uniform then normalized."""
    perm = rng.permutation(n)
    half = n // 2
    rho0 = np.zeros(n)
    nu = np.zeros(n)
    rho0[perm[:half]] = rng.uniform(size=half)
    nu[perm[half:]] = rng.uniform(size=n - half)
    return rho0 / rho0.sum(), nu / nu.sum()


def _normalize_exact(v):
    # keep the sum within float rounding of 1 after JSON round-trips
    v = np.asarray(v, dtype=np.float64)
    v = v / v.sum()
    i = int(np.argmax(v))
    v[i] += 1.0 - v.sum()
    return v


def star(k=7, random_supports=False, seed=0):
    """Center node 0 and k-1 leaves; Dirac at the center, uniform target on the leaves."""
    if k < 2:
        raise ConfigError("star needs k >= 2")
    graph = _undirected(k, [(0, i) for i in range(1, k)])
    if random_supports:
        rho0, nu = _random_supports(k, np.random.default_rng(seed))
    else:
        rho0 = np.zeros(k)
        rho0[0] = 1.0
        nu = np.r_[0.0, np.full(k - 1, 1.0 / (k - 1))]
    return _spec(f"star{k}", graph, _normalize_exact(rho0), _normalize_exact(nu))


def path(k=14, storage=0.3):
    """Path with mass on the two central nodes sent to both ends.

    The third-to-last node has a storage bound, so the right-moving half is
    delivered partially. With k = 14, omega = 0.1 and gamma = 1e-3 the target
    is reached after six iterations.
    """
    if k < 4:
        raise ConfigError("path needs k >= 4")
    store = [None] * k
    store[k - 3] = storage
    graph = _undirected(k, [(i, i + 1) for i in range(k - 1)], storage=store)
    c = (k - 2) // 2
    rho0 = np.zeros(k)
    rho0[[c, c + 1]] = 0.5
    nu = np.zeros(k)
    nu[[0, k - 2]] = 0.5
    return _spec(f"path{k}", graph, rho0, nu)


def grid(k=10, seed=0):
    """k x k lattice with unit weights and random supports."""
    if k < 2:
        raise ConfigError("grid needs k >= 2")
    idx = np.arange(k * k).reshape(k, k)
    pairs = [(idx[i, j], idx[i, j + 1]) for i in range(k) for j in range(k - 1)]
    pairs += [(idx[i, j], idx[i + 1, j]) for i in range(k - 1) for j in range(k)]
    rho0, nu = _random_supports(k * k, np.random.default_rng(seed))
    return _spec(f"grid{k}x{k}", _undirected(k * k, pairs), _normalize_exact(rho0),
                 _normalize_exact(nu), gamma=0.1)


def cycle(k=100, seed=0):
    if k < 3:
        raise ConfigError("cycle needs k >= 3")
    rho0, nu = _random_supports(k, np.random.default_rng(seed))
    pairs = [(i, (i + 1) % k) for i in range(k)]
    return _spec(f"cycle{k}", _undirected(k, pairs), _normalize_exact(rho0),
                 _normalize_exact(nu), gamma=0.1)


def random_graph(k=100, seed=0, extra_degree=1.0):
    """Connected random graph: a random spanning tree plus about extra_degree*k/2 chords."""
    if k < 2:
        raise ConfigError("random graph needs k >= 2")
    rng = np.random.default_rng(seed)
    order = rng.permutation(k)
    pairs = {tuple(sorted((int(order[i]), int(order[rng.integers(i)])))) for i in range(1, k)}
    target = len(pairs) + int(extra_degree * k / 2)
    while len(pairs) < target and len(pairs) < k * (k - 1) // 2:
        a, b = rng.choice(k, size=2, replace=False)
        pairs.add(tuple(sorted((int(a), int(b)))))
    weights = rng.uniform(1.0, 2.0, size=len(pairs))
    edges = [(a, b, float(w)) for (a, b), w in zip(sorted(pairs), weights)]
    rho0, nu = _random_supports(k, rng)
    return _spec(f"random{k}_s{seed}", _undirected(k, edges), _normalize_exact(rho0),
                 _normalize_exact(nu), gamma=0.1)


def two_path(k=4, cap=None, detour_weight=1.2):
    """All mass at node 0 must reach node k along either a straight unit-weight
    path 0..k or a detour of k hops with weight ``detour_weight`` per edge.
    ``cap`` bounds every link.
    """
    if k < 2:
        raise ConfigError("two_path needs k >= 2")
    straight = [(i, i + 1, 1.0) for i in range(k)]
    detour_nodes = [0] + list(range(k + 1, 2 * k)) + [k]
    detour = [(a, b, detour_weight) for a, b in zip(detour_nodes, detour_nodes[1:])]
    n = 2 * k
    graph = _undirected(n, straight + detour, capacity=cap)
    rho0 = np.zeros(n)
    rho0[0] = 1.0
    nu = np.zeros(n)
    nu[k] = 1.0
    name = "two_path" if cap is None else f"two_path_cap{cap:g}"
    return _spec(name, graph, rho0, nu)


# node roles of the synthetic small network
DWN_SOURCES = (0, 1)
DWN_TANKS = (4, 5, 8)
DWN_DEMANDS = (9, 10, 11, 12)


def small_dwn(retention=0.2):
    """Synthetic stand-in for a small drinking-water network.

    Two sources feed junctions (2, 3), which fill tanks (4, 5), a central
    junction (6, 7) links them to a third tank (8), and four demand sectors
    (9-12) hang off the tanks. Weights are uniform; junctions have limited
    retention. Water starts at the sources and tanks and must end at the
    demand sectors. Omega starts at 0.75 and drops to 0.1 after the first step.
    """
    pairs = [(0, 2), (1, 3), (2, 4), (3, 5), (2, 3), (4, 6), (5, 7), (6, 7),
             (6, 8), (7, 8), (4, 9), (6, 10), (8, 11), (5, 12), (7, 12)]
    n = 13
    storage = [None] * n
    for j in (2, 3, 6, 7):
        storage[j] = retention
    graph = _undirected(n, pairs, storage=storage)
    rho0 = np.zeros(n)
    rho0[list(DWN_SOURCES)] = [0.35, 0.25]
    rho0[list(DWN_TANKS)] = [0.15, 0.15, 0.1]
    nu = np.zeros(n)
    nu[list(DWN_DEMANDS)] = [0.3, 0.2, 0.3, 0.2]
    return _spec("small_dwn", graph, rho0, nu,
                 note="synthetic topology: sources, junctions, tanks and demand sectors; "
                      "edge weights and retention values are illustrative",
                 omega=0.75,
                 events=[{"t": 1, "kind": "set_omega", "omega": 0.1}])


def generate(kind, k=None, *, cap=None, seed=0):
    """Dispatch on kind; ``k`` is the size parameter where the kind has one."""
    if kind == "star":
        return star(k or 7)
    if kind == "path":
        return path(k or 14)
    if kind == "grid":
        return grid(k or 10, seed=seed)
    if kind == "cycle":
        return cycle(k or 100, seed=seed)
    if kind == "random":
        return random_graph(k or 100, seed=seed)
    if kind == "two_path":
        return two_path(k or 4, cap=cap)
    if kind == "small_dwn":
        return small_dwn()
    raise UnknownKind(f"unknown generator kind {kind!r}; choose from {', '.join(KINDS)}")
