"""Benchmark the numba kernels against their pure-numpy twins.

Runs the fused solver loop on the built-in five-generator instance and
the probabilistic quantizer core on a large vector, times both backends,
and verifies that their outputs agree bit for bit.

    python benchmarks/bench_backends.py [--iterations N] [--repeats R]
"""

import argparse
import time

import numpy as np

from ducomp import CompressorSpec, build_ring, build_weight_matrix, default_params
from ducomp import kernels
from ducomp.experiments import DEFAULT_ROWS, DEFAULT_TOTAL_DEMAND
from ducomp.compression import scaling_factor
from ducomp.problem import build_dispatch_instance


def _loop_inputs(iterations, comp_kind="q1", seed=0):
    spec = build_dispatch_instance(DEFAULT_ROWS, DEFAULT_TOTAL_DEMAND)
    topo = build_ring(spec.m)
    W = build_weight_matrix(topo)
    params = default_params(spec, W.entries)
    comp = CompressorSpec(kind=comp_kind, delta_p=1)
    m, n, d = spec.m, spec.n, spec.d
    A = np.ascontiguousarray(np.stack(spec.A))
    AT = np.ascontiguousarray(np.stack([Ai.T for Ai in spec.A]))
    a = np.array([c.a for c in spec.costs])
    beta = np.stack([c.beta for c in spec.costs])
    x = np.zeros((m, n))
    y = np.stack(spec.demand)
    z = np.zeros((m, d))
    h = np.zeros((m, n))
    xhat = np.zeros((m, n))
    R = np.array([scaling_factor(k + 1, params.schedule) for k in range(iterations)])
    rngs = np.random.SeedSequence(seed).spawn(m)
    U = np.empty((iterations, m, n))
    for i, s in enumerate(rngs):
        U[:, i, :] = np.random.default_rng(s).random((iterations, n))
    lo, hi = comp.grid_bounds()
    comp_id = {"identity": kernels.IDENTITY, "q1": kernels.Q1,
               "q2": kernels.Q2, "q3": kernels.Q3}[comp_kind]
    args = (W.entries, A, AT, a, beta, x, y, z, h, xhat, R, U, comp_id,
            float(comp.delta_p), float(lo), float(hi),
            2.0 ** (comp.bits - 1), 2.0 ** (1 - comp.bits),
            params.gamma, params.tau, params.psi, params.alpha)
    return args, (iterations, m, n, d)


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_loop(iterations, repeats):
    nb = kernels.numba_kernels()
    args, (iters, m, n, d) = _loop_inputs(iterations)

    def outputs():
        return (np.empty((iters, m, n)), np.empty((iters, m, n)),
                np.empty((iters, m, d)), np.zeros(iters, dtype=np.int64))

    out_np = outputs()
    out_nb = outputs()
    kernels.run_quadratic_np(*args, *out_np)
    nb["run"](*args, *out_nb)  # includes JIT compile on first call
    same = all(np.array_equal(a_, b_) for a_, b_ in zip(out_np, out_nb))

    t_np = _time(lambda: kernels.run_quadratic_np(*args, *outputs()), repeats)
    t_nb = _time(lambda: nb["run"](*args, *outputs()), repeats)
    return t_np, t_nb, same


def bench_q1_core(size, repeats):
    nb = kernels.numba_kernels()
    rng = np.random.default_rng(1)
    v = rng.uniform(-10, 10, size)
    u = rng.random(size)
    out_np, _ = kernels.q1_core_np(v, 2.0, -np.inf, np.inf, u)
    out_nb, _ = nb["q1"](v, 2.0, -np.inf, np.inf, u)
    same = np.array_equal(out_np, out_nb)
    t_np = _time(lambda: kernels.q1_core_np(v, 2.0, -np.inf, np.inf, u), repeats)
    t_nb = _time(lambda: nb["q1"](v, 2.0, -np.inf, np.inf, u), repeats)
    return t_np, t_nb, same


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--iterations", type=int, default=5000)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    print(f"{'kernel':<28}{'numpy':>12}{'numba':>12}{'speedup':>10}  bitwise")
    t_np, t_nb, same = bench_loop(args.iterations, args.repeats)
    print(f"{'solver loop (%d iters)' % args.iterations:<28}"
          f"{t_np * 1e3:>10.2f}ms{t_nb * 1e3:>10.2f}ms{t_np / t_nb:>9.1f}x  {same}")
    t_np, t_nb, same = bench_q1_core(1_000_000, args.repeats)
    print(f"{'q1 core (1e6 entries)':<28}"
          f"{t_np * 1e3:>10.2f}ms{t_nb * 1e3:>10.2f}ms{t_np / t_nb:>9.1f}x  {same}")


if __name__ == "__main__":
    main()
