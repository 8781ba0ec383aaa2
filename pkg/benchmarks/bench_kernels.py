"""Time the numba kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from coofdm._kernels import NUMBA_KERNELS, NUMPY_KERNELS
from coofdm.modulation import get_constellation


def cases(rng):
    field = rng.standard_normal(2 ** 17) + 1j * rng.standard_normal(2 ** 17)
    n_w = 2 * 10 ** 6
    g = rng.standard_normal(n_w)
    rx = rng.standard_normal(10 ** 5) + 1j * rng.standard_normal(10 ** 5)
    points = get_constellation("QAM16").points
    return {
        "lfsr (10^6 bits)": lambda k: k.lfsr(0x5A5A5, 10 ** 6),
        "nonlinear_phase (2^17)": lambda k: k.nonlinear_phase(field.copy(), 1e-3),
        "rprop (2*10^6 weights)": lambda k: k.rprop(np.zeros(n_w), g, g[::-1].copy(), np.full(n_w, 0.07),
                                                    1.2, 0.5, 1e-6, 50.0),
        "quantize (2^18)": lambda k: k.quantize(field.real.repeat(2), 3.0, 8),
        "nearest QAM16 (10^5)": lambda k: k.nearest(rx, points),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if NUMBA_KERNELS is None:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<26}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}")
    for name, fn in cases(rng).items():
        fn(NUMBA_KERNELS)  # compile outside the timing
        t_np = min(timeit.repeat(lambda: fn(NUMPY_KERNELS), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: fn(NUMBA_KERNELS), number=1, repeat=args.repeat))
        print(f"{name:<26}{1e3 * t_np:>10.2f}{1e3 * t_nb:>10.2f}{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
