"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends are called directly, so the env flag does not matter here.
"""

import argparse
import time

import numpy as np

from markovcode import kernels
from markovcode.chain import matrix_powers, random_matrix
from markovcode.codebook import complete_code_array
from markovcode.sim import cumulative_rows


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_scan(n, repeat):
    codes = complete_code_array(n)
    powers = matrix_powers(random_matrix(n, 0).rows, n - 1)
    V = np.random.default_rng(0).normal(size=n * (n - 1))
    fast = lambda: kernels.improve_scan_numba(powers, codes, V, kernels.TIE_TOL)
    slow = lambda: kernels.improve_scan_numpy(powers, codes, V)
    fast()  # compile
    b1, _ = fast()
    b2, _ = slow()
    assert np.array_equal(b1, b2)
    return f"improve_scan N={n} ({len(codes)} codes)", best_of(fast, repeat), best_of(slow, repeat)


def bench_sim(n, steps, repeat):
    P = random_matrix(n, 0)
    cum = cumulative_rows(matrix_powers(P.rows, n - 1))
    actions = np.tile(complete_code_array(n)[0], (n * (n - 1), 1))
    u = np.random.default_rng(0).random(steps)

    def run(fn):
        return lambda: fn(cum, actions, u, 0, np.zeros(n * (n - 1), dtype=np.int64))

    run(kernels.simulate_chunk_numba)()
    return (f"simulate N={n} ({steps} steps)",
            best_of(run(kernels.simulate_chunk_numba), repeat),
            best_of(run(kernels.simulate_chunk_python), repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rows = [bench_scan(n, args.repeat) for n in (5, 6, 7, 8)]
    rows.append(bench_sim(4, 1 << 16, args.repeat))
    rows.append(bench_sim(8, 1 << 16, args.repeat))
    print(f"{'kernel':<36}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, fast, slow in rows:
        print(f"{name:<36}{1e3 * fast:>12.3f}{1e3 * slow:>12.3f}{slow / fast:>9.1f}x")


if __name__ == "__main__":
    main()
