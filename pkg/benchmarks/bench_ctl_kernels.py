"""Compare the numba and numpy fixpoint kernels on random sparse graphs.

    python3 benchmarks/bench_ctl_kernels.py [--states N] [--degree D] [--repeat R]

EU on a long chain-like graph is where the numpy version hurts: it needs one
full sweep per layer, while the worklist version touches each edge once.
"""
import argparse
import time

import numpy as np

from bpkb.ctl import _kernels as K


def random_csr(n, degree, rng):
    # a backbone chain keeps the fixpoints deep; extra random edges add fan-out
    src = np.concatenate([np.arange(n - 1), rng.integers(0, n, n * (degree - 1))])
    dst = np.concatenate([np.arange(1, n), rng.integers(0, n, n * (degree - 1))])
    forward = dst > src  # mostly acyclic, so sinks exist
    src, dst = src[forward], dst[forward]
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    succ_ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(succ_ptr, src + 1, 1)
    succ_ptr = np.cumsum(succ_ptr)
    order = np.lexsort((src, dst))
    pred_ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(pred_ptr, dst[order] + 1, 1)
    return succ_ptr, dst.astype(np.int64), np.cumsum(pred_ptr), src[order].astype(np.int64)


def bench(fn, args, repeat):
    fn(*args)  # warm-up (and JIT)
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--states", type=int, default=20000)
    ap.add_argument("--degree", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    rng = np.random.default_rng(a.seed)
    sp, si, pp, pi = random_csr(a.states, a.degree, rng)
    left = rng.random(a.states) < 0.9
    right = np.zeros(a.states, dtype=np.bool_)
    right[-1] = True
    cases = {
        "EX": lambda be: (be[0], (left, sp, si)),
        "EU": lambda be: (be[1], (left, right, sp, si, pp, pi)),
        "EG": lambda be: (be[2], (left, sp, si, pp, pi)),
    }
    print(f"states={a.states} edges={len(si)}")
    print(f"{'op':<4}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, make in cases.items():
        fn, args = make(K.BACKENDS["numpy"])
        t_np, r_np = bench(fn, args, a.repeat)
        fn, args = make(K.BACKENDS["numba"])
        t_nb, r_nb = bench(fn, args, a.repeat)
        assert np.array_equal(r_np, r_nb), name
        print(f"{name:<4}{t_np * 1e3:>12.2f}{t_nb * 1e3:>12.2f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
