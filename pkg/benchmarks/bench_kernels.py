"""Time the compiled kernels against the pure-python fallback.

Runs the same representative workloads under both backends, checks that
the outputs agree bit for bit (both draw uniforms in the same order), and
prints a timing table with the speedup factor.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--scale X]
"""

import argparse
import time

import numpy as np

from agelab import analytic, fin, kernels, rem, twopoint
from agelab.streams import UniformSource, stream
from agelab.trapwalk import WalkParams


def _walk(graph, a, n_paths, t_max):
    def run():
        ens = twopoint.WalkEnsemble(
            graph=graph, beta=2.0, params=WalkParams(a=a, boundary="allow"),
            n_disorders=1, n_paths=n_paths, seed=7)
        times = np.geomspace(1.0, t_max, 17)
        return twopoint.sample_disorder(ens, 0, times)
    return run


def _rem(n_paths, steps):
    chain = rem.make_chain(14, 2.0, -1.0, seed=3)

    def run():
        return rem.pi_event_paths(chain, steps, np.array([steps]),
                                  n_paths, seed=5)
    return run


def _fin(n_paths, duration):
    rho = fin.sample_speed_measure(20.0, 0.05, 0.5, seed=9)

    def run():
        out = []
        for k in range(n_paths):
            path = fin.simulate_fin(rho, duration,
                                    UniformSource(stream(9, 99, k)))
            out.append((path.entry_atom, path.n_jumps))
        return out
    return run


def _renewal(t_max, step):
    def run():
        sol = analytic.solve_renewal(0.5, t_max=t_max, step=step)
        return sol.no_jump(t_max / 2.0, t_max / 2.0 + 1.0)
    return run


def _time(fn, repeat):
    best, value = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        value = fn()
        best = min(best, time.perf_counter() - t0)
    return best, value


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return bool(np.array_equal(a, b))
    return a == b


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3,
                    help="timing repetitions per case (best is kept)")
    ap.add_argument("--scale", type=float, default=1.0,
                    help="multiply workload sizes by this factor")
    args = ap.parse_args()
    s = args.scale

    cases = [
        ("torus walk a=0.0", _walk("torus:64", 0.0, max(1, int(16 * s)), 1e4)),
        ("segment walk a=0.5",
         _walk("segment:2000", 0.5, max(1, int(16 * s)), 1e4)),
        ("spin-flip chain", _rem(max(1, int(200 * s)), int(4000 * s))),
        ("atom-hopping diffusion", _fin(max(1, int(100 * s)), 100.0 * s)),
        ("renewal solver", _renewal(200.0 * s, 0.01)),
    ]

    if "cython" not in kernels.available_backends():
        print("compiled kernels unavailable; nothing to compare")
        return 1

    default = kernels.backend()
    rows = []
    try:
        for name, fn in cases:
            results = {}
            for backend in ("cython", "python"):
                kernels.set_backend(backend)
                fn()  # warm-up (landscape caches, import costs)
                results[backend] = _time(fn, args.repeat)
            (t_cy, v_cy), (t_py, v_py) = results["cython"], results["python"]
            agree = _same(v_cy, v_py)
            rows.append((name, t_cy, t_py, t_py / t_cy, agree))
    finally:
        kernels.set_backend(default)

    print(f"{'case':<24} {'cython':>9} {'python':>9} {'speedup':>8}  match")
    for name, t_cy, t_py, speedup, agree in rows:
        print(f"{name:<24} {t_cy:8.3f}s {t_py:8.3f}s {speedup:7.1f}x  "
              f"{'yes' if agree else 'NO'}")
    if not all(r[4] for r in rows):
        print("backend outputs differ — investigate before trusting timings")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
