"""Smoke test for the fracthj Python extension.

Build and install the extension first:

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/fracthj-*.whl

then run ``python python/smoke_test.py``.
"""

import json
import math
import os
import sys
import tempfile

import fracthj


def check(name, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {name} {detail}")
    return ok


def main():
    results = []

    # E_{1/2}(-1) = e erfc(1)
    e = fracthj.ml(0.5, -1.0)
    results.append(check("mittag-leffler", abs(e - math.e * math.erfc(1.0)) < 1e-14, f"{e:.16f}"))

    grid = fracthj.TimeGrid.uniform(1.0, 32, 0.5)
    d = fracthj.caputo(grid, [t * t for t in grid.nodes])
    exact = 2.0 / math.gamma(2.5) * grid.nodes[-1] ** 1.5
    results.append(check("caputo power rule", abs(d[-1] - exact) < 1e-2, f"{d[-1]:.6f} vs {exact:.6f}"))

    torus = fracthj.Torus(1, 32)
    graded = fracthj.TimeGrid.graded(1.0, 64, 0.7, 3.0)
    u0 = torus.sample(lambda x, y: math.cos(2 * math.pi * x))
    heat = fracthj.solve_heat(graded, torus, 1.0, u0, scheme="mild")
    decay = fracthj.ml(0.7, -4 * math.pi**2)
    results.append(check("heat mode decay", abs(heat.at(-1)[0] - decay) < 1e-12, f"{heat.at(-1)[0]:.3e}"))

    h = fracthj.Hamiltonian.quadratic(torus, torus.sample(lambda x, y: 0.02 * (1 + 0.5 * math.sin(2 * math.pi * x))))
    problem = fracthj.HjProblem.manufactured(graded, 0.1, h)
    sol = problem.solve()
    err = sol.u.distance(problem.exact())
    results.append(check("HJ manufactured", sol.converged and err < 5e-3, f"error {err:.2e}, {len(sol.trace)} iterations"))

    rho = fracthj.solve_fp(problem, sol, torus.bump([0.3], 0.1))
    mass = fracthj.mass_deviation(rho)
    results.append(check("FP mass", mass < 1e-12, f"{mass:.1e}"))

    res = fracthj.duality_residual(problem, sol, rho)
    results.append(check("duality residual", abs(res) < 1e-2, f"{res:.2e}"))

    with tempfile.TemporaryDirectory() as out:
        status = fracthj.run_experiment("ml-table", json.dumps({"beta": 0.5, "z": [0, -0.5, -1]}), out)
        results.append(check("run_experiment", status == "ok" and os.path.exists(os.path.join(out, "manifest.json"))))

    print(f"fracthj {fracthj.__version__}: {sum(results)}/{len(results)} checks passed")
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
