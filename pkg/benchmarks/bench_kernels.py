"""Timing comparison of the compiled and pure-numpy sequence kernels.

Run with ``python3 benchmarks/bench_kernels.py``.  Exercises the two hot
kernels (same-padded kernel-3 convolution and masked adaptive average
pooling), forward and backward, at a training-shaped workload.
"""

import time

import numpy as np

from pdeeppp import kernels, kernels_numpy

try:
    from pdeeppp import _ckernels
except ImportError:
    _ckernels = None

B, C_IN, C_OUT, L, POOL = 32, 16, 16, 33, 8
REPEATS = 200


def timeit(fn, *args):
    fn(*args)  # warm-up
    t0 = time.perf_counter()
    for _ in range(REPEATS):
        fn(*args)
    return (time.perf_counter() - t0) / REPEATS * 1e6  # microseconds


def main():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((B, C_IN, L)).astype(np.float32)
    w = rng.standard_normal((C_OUT, C_IN, 3)).astype(np.float32)
    bias = rng.standard_normal(C_OUT).astype(np.float32)
    g_conv = rng.standard_normal((B, C_OUT, L)).astype(np.float32)
    lengths = rng.integers(POOL, L + 1, size=B).astype(np.int64)
    mask = (np.arange(L)[None, :] < lengths[:, None]).astype(np.uint8)
    g_pool = rng.standard_normal((B, C_IN, POOL)).astype(np.float32)

    cases = [
        ("conv forward", lambda k: k.conv1d_same(x, w, bias)),
        ("conv backward", lambda k: k.conv1d_same_backward(g_conv, x, w)),
        ("pool forward", lambda k: k.avg_pool_masked(x, lengths, mask, POOL)),
        ("pool backward",
         lambda k: k.avg_pool_masked_backward(g_pool, lengths, mask, L)),
    ]

    print(f"workload: batch {B}, {C_IN} channels, length {L}, "
          f"{REPEATS} repeats; active backend: {kernels.BACKEND}")
    print(f"{'kernel':<16}{'numpy (us)':>12}{'compiled (us)':>15}{'speedup':>10}")
    for name, call in cases:
        t_np = timeit(call, kernels_numpy)
        if _ckernels is None:
            print(f"{name:<16}{t_np:>12.1f}{'n/a':>15}{'n/a':>10}")
            continue
        t_c = timeit(call, _ckernels)
        print(f"{name:<16}{t_np:>12.1f}{t_c:>15.1f}{t_np / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
