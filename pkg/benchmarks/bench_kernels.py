"""Benchmark the JIT-compiled hot loops against their vectorized numpy
twins: multipath ray tracing over a grid and expected-cost rewards over
activation sets.

Run with numba active (default) to see the compiled speed, or with
``BEAMCKM_NO_NUMBA=1`` to time the loop bodies as plain Python.  Each
kernel is called once before timing so JIT compilation is not measured.
"""

import argparse
import time

import numpy as np

import beamckm as bc
from beamckm.kernels import (
    NUMBA_ENABLED,
    activation_rewards_loops,
    activation_rewards_numpy,
    trace_paths_loops,
    trace_paths_numpy,
)
from beamckm.strategy import enumerate_activations


def bench(fn, *args, repeat=5):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        t1 = time.perf_counter()
        times.append(t1 - t0)
    return out, min(times), sum(times) / len(times)


def trace_workload(num_points: int):
    side = int(np.sqrt(num_points))
    xs = np.linspace(0.0, 128.0, side)
    gx, gy = np.meshgrid(xs, xs)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    bs = np.array([64.0, -1.0])
    scat_pos = np.array([[20.0, 100.0], [120.0, 60.0], [36.0, 20.0]])
    scat_refl = np.array([0.4, 0.5, 0.3])
    scat_phase = np.array([0.3, -1.2, 2.1])
    scat_vis = np.array([True, True, True])
    obstacles = np.array([[72.0, 56.0, 100.0, 56.0]])
    wavelength = 3e8 / 8e10
    return (pts, bs, scat_pos, scat_refl, scat_phase, scat_vis,
            obstacles, wavelength, 1.0, 4)


def reward_workload(num_trees: int, num_layers: int, seed: int = 99):
    rng = np.random.default_rng(seed)
    n = 2**num_layers
    acts_list = enumerate_activations(0, num_layers)
    acts = np.zeros((len(acts_list), num_layers), dtype=np.uint8)
    for z, layers in enumerate(acts_list):
        acts[z, np.asarray(layers) - 1] = 1
    cases = []
    for _ in range(num_trees):
        mask = rng.random(n) < 0.4
        if not mask.any():
            mask[rng.integers(n)] = True
        weights = np.where(mask, rng.uniform(0.5, 2.0, n), 0.0)
        tree = bc.PrunedTree.from_bottom_weights(weights)
        targets = tree.candidates(num_layers).astype(np.int64)
        cases.append((tree.prefix_sums(), weights, targets))
    return acts, cases


def run_rewards(fn, acts, cases, num_layers):
    total = 0.0
    for csum, weights, targets in cases:
        total += fn(csum, acts, weights, targets, num_layers).sum()
    return total


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=4096,
                        help="grid points for the ray-tracing workload")
    parser.add_argument("--trees", type=int, default=300,
                        help="random trees for the reward workload")
    parser.add_argument("--layers", type=int, default=7,
                        help="codebook depth for the reward workload")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    mode = "numba JIT" if NUMBA_ENABLED else "pure Python (BEAMCKM_NO_NUMBA)"
    print(f"loop kernels run as: {mode}")

    tw = trace_workload(args.points)
    trace_paths_loops(*tw)  # warm-up / JIT compile
    trace_paths_numpy(*tw)
    out_l, best_l, avg_l = bench(trace_paths_loops, *tw, repeat=args.repeat)
    out_n, best_n, avg_n = bench(trace_paths_numpy, *tw, repeat=args.repeat)
    same = all(np.allclose(a, b) for a, b in zip(out_l, out_n))
    print(f"trace_paths     {tw[0].shape[0]} points:")
    print(f"  loops  best={best_l * 1e3:8.2f} ms  avg={avg_l * 1e3:8.2f} ms")
    print(f"  numpy  best={best_n * 1e3:8.2f} ms  avg={avg_n * 1e3:8.2f} ms")
    print(f"  outputs match: {same}   loops speedup vs numpy: {best_n / best_l:.2f}x")

    acts, cases = reward_workload(args.trees, args.layers)
    run_rewards(activation_rewards_loops, acts, cases[:2], args.layers)
    run_rewards(activation_rewards_numpy, acts, cases[:2], args.layers)
    tot_l, best_l, avg_l = bench(
        run_rewards, activation_rewards_loops, acts, cases, args.layers,
        repeat=args.repeat,
    )
    tot_n, best_n, avg_n = bench(
        run_rewards, activation_rewards_numpy, acts, cases, args.layers,
        repeat=args.repeat,
    )
    print(f"activation_rewards  {len(cases)} trees x {acts.shape[0]} activations:")
    print(f"  loops  best={best_l * 1e3:8.2f} ms  avg={avg_l * 1e3:8.2f} ms")
    print(f"  numpy  best={best_n * 1e3:8.2f} ms  avg={avg_n * 1e3:8.2f} ms")
    print(f"  outputs match: {np.isclose(tot_l, tot_n)}   "
          f"loops speedup vs numpy: {best_n / best_l:.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
