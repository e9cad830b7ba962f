"""Time the numba and numpy backends on the two hot loops.

    python benchmarks/bench_backends.py [--n 2000] [--d 3] [--grid-size 101]
"""
import argparse
import time

import numpy as np

from smoothbackfit import FitConfig, KernelSpec, Scenario, compute_marginals, generate, make_uniform_grid
from smoothbackfit import _accel
from smoothbackfit.projection import build_operators, project_response


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=2000)
    parser.add_argument("--d", type=int, default=3)
    parser.add_argument("--grid-size", type=int, default=101)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    comps = ("sine", "quadratic", "cubic", "linear")
    s = Scenario(d=args.d, n=args.n, components=tuple(comps[j % 4] for j in range(args.d)),
                 design="copula", rho=0.5, seed=1, grid_size=args.grid_size)
    data = generate(s)
    spec = KernelSpec.from_rule(0.5, args.n, args.d)
    grids = make_uniform_grid(s.domain, args.grid_size)
    tables = compute_marginals(data.X, spec, grids)
    ops = build_operators(tables)
    t = project_response(data.Y, tables)
    zeros = np.zeros_like(t.levels)
    x, g, h = data.X[:, 0].copy(), grids[0], float(spec.bandwidths[0])
    config = FitConfig()

    # compile outside the timed region
    _accel.weight_matrix(x, g.points, g.weights, h, "numba")
    _accel.run_sweeps(t.f0, t.levels, t.derivs, 0.0, zeros, zeros, ops, config.tolerance, 2, "numba")

    print(f"n={args.n} d={args.d} grid={args.grid_size} numba={'yes' if _accel.HAS_NUMBA else 'no'}")
    print(f"{'kernel':<10}{'numpy [ms]':>12}{'numba [ms]':>12}{'speed-up':>10}")
    for name, run in (
        ("weights", lambda b: _accel.weight_matrix(x, g.points, g.weights, h, b)),
        ("sweeps", lambda b: _accel.run_sweeps(t.f0, t.levels, t.derivs, 0.0, zeros, zeros, ops,
                                               config.tolerance, config.max_sweeps, b)),
    ):
        tn = best_of(lambda: run("numpy"), args.repeat)
        tb = best_of(lambda: run("numba"), args.repeat)
        print(f"{name:<10}{1e3 * tn:>12.2f}{1e3 * tb:>12.2f}{tn / tb:>10.1f}")


if __name__ == "__main__":
    main()
