"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py --size 100000 --repeat 5
"""

import argparse
import math
import timeit

import numpy as np

from qpkc import _kernels


def make_inputs(size, seed):
    g = np.random.default_rng(seed)
    states = g.normal(size=(size, 4)) + 1j * g.normal(size=(size, 4))
    states /= np.linalg.norm(states, axis=1, keepdims=True)
    return {
        "states": states,
        "phis": g.uniform(0, 2 * math.pi, size),
        "phis2": g.uniform(0, 2 * math.pi, size),
        "u": g.random(size),
        "bits": g.integers(0, 2, size).astype(np.int8),
    }


def cases(x):
    return {
        "measure": (
            lambda: _kernels.measure_batch_numpy(x["states"], x["phis"], _kernels.BOB, x["u"]),
            lambda: _kernels.measure_batch_jit(x["states"], x["phis"], _kernels.BOB, x["u"]),
        ),
        "expectation": (
            lambda: _kernels.expectation_batch_numpy(x["states"], x["phis"], x["phis2"]),
            lambda: _kernels.expectation_batch_jit(x["states"], x["phis"], x["phis2"]),
        ),
        "helstrom": (
            lambda: _kernels.helstrom_batch_numpy(x["phis"], x["bits"], x["u"]),
            lambda: _kernels.helstrom_batch_jit(x["phis"], x["bits"], x["u"]),
        ),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if not _kernels.HAS_NUMBA:
        ap.exit(1, "numba is not installed; nothing to compare\n")
    x = make_inputs(args.size, args.seed)
    print(f"batch size {args.size}, best of {args.repeat}")
    print(f"{'kernel':<12} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for name, (np_fn, jit_fn) in cases(x).items():
        jit_fn()  # compile outside the timed region
        t_np = min(timeit.repeat(np_fn, number=1, repeat=args.repeat)) * 1e3
        t_jit = min(timeit.repeat(jit_fn, number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<12} {t_np:>10.2f} {t_jit:>10.2f} {t_np / t_jit:>7.1f}x")


if __name__ == "__main__":
    main()
