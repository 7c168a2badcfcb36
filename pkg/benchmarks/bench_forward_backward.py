"""Time one forward-backward pass of the pair model on both backends.

    python3 benchmarks/bench_forward_backward.py [--slots 50000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from cswitness.hmm import _fallback, pair_template_model

try:
    from cswitness.hmm import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--slots", type=int, default=50_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    m = pair_template_model(seed=args.seed)
    obs = np.random.default_rng(args.seed).integers(0, 4, size=args.slots).astype(np.int64)

    backends = [_fallback] + ([_kernels] if _kernels is not None else [])
    results = {}
    for k in backends:
        results[k.NAME] = best_of(lambda: k.forward_backward(m.pi, m.a, m.b, obs), args.repeat)
        print(f"{k.NAME:8s} {results[k.NAME] * 1e3:9.2f} ms  ({args.slots} slots, best of {args.repeat})")

    if _kernels is None:
        print("compiled kernel not built; only the fallback was timed")
        return
    ref = _fallback.forward_backward(m.pi, m.a, m.b, obs)
    got = _kernels.forward_backward(m.pi, m.a, m.b, obs)
    diff = max(abs(ref[0] - got[0]), *(float(np.abs(x - y).max()) for x, y in zip(ref[2:], got[2:])))
    print(f"speedup  {results['python'] / results['cython']:9.1f}x   max abs difference {diff:.1e}")


if __name__ == "__main__":
    main()
