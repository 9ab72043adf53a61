"""Write the small-instance corpus used by the LP comparison tests.

    python3 scripts/make_corpus.py [tests/corpus]
"""

import json
import sys
from pathlib import Path

INF = None  # JSON null = unbounded


def graph(n, edges, storage=None, undirected=True):
    return {"n": n, "undirected": undirected, "edges": edges,
            "storage": storage or [INF] * n}


def spec(name, g, rho0, nu, omega, gamma):
    return {"name": name, "graph": g, "rho0": rho0, "nu": nu, "omega": omega,
            "gamma": gamma, "eps_outer": 1e-3, "eps_inner": 1e-6, "max_outer": 500,
            "max_inner": 50000, "events": [], "output": f"runs/{name}"}


CORPUS = [
    spec("pair_free", graph(2, [[0, 1, 1.0, INF]]), [1, 0], [0, 1], 0.1, 1e-3),
    spec("pair_cap", graph(2, [[0, 1, 1.0, 0.5]]), [1, 0], [0, 1], 0.3, 2e-3),
    spec("pair_storage", graph(2, [[0, 1, 1.0, INF]], [INF, 0.4]), [1, 0], [0, 1], 0.3, 2e-3),
    spec("pair_stay", graph(2, [[0, 1, 2.0, INF]]), [0.3, 0.7], [0.8, 0.2], 0.7, 1e-3),
    spec("pair_mixed", graph(2, [[0, 1, 1.0, 0.35]]), [0.6, 0.4], [0.1, 0.9], 0.1, 5e-3),
    spec("line3_free", graph(3, [[0, 1, 1.0, INF], [1, 2, 1.3, INF]]), [1, 0, 0], [0, 0, 1], 0.1, 1e-3),
    spec("line3_cap", graph(3, [[0, 1, 1.0, 0.3], [1, 2, 1.3, INF]]), [0.6, 0.4, 0], [0, 0.2, 0.8],
         0.3, 2e-3),
    spec("triangle_mixed", graph(3, [[0, 1, 1.0, 0.25], [1, 2, 1.5, INF], [0, 2, 0.8, INF]],
                                 [INF, INF, 0.7]), [0.5, 0.5, 0], [0, 0.2, 0.8], 0.3, 2e-3),
    spec("star3_storage", graph(3, [[1, 0, 1.0, INF], [1, 2, 1.0, INF]], [0.4, INF, INF]),
         [0, 1, 0], [0.5, 0, 0.5], 0.1, 2e-3),
    spec("cycle3_directed", graph(3, [[0, 1, 1.0, INF], [1, 2, 1.0, 0.4], [2, 0, 1.0, INF]],
                                  undirected=False), [1, 0, 0], [0, 0.5, 0.5], 0.3, 2e-3),
]


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "tests/corpus")
    out.mkdir(parents=True, exist_ok=True)
    for s in CORPUS:
        (out / f"{s['name']}.json").write_text(json.dumps(s, indent=1) + "\n")
        print(out / f"{s['name']}.json")


if __name__ == "__main__":
    main()
