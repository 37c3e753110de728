#!/usr/bin/env python3
"""Benchmark the compiled sampling kernel against the numpy fallback.

Runs each backend over identical uniform blocks for a range of
configurations (table inversion, exact binomial thinning, Gaussian
approximation paths) and reports pulses per second plus the speedup.
Output equality is asserted while timing, since the backends are
contractually bit-identical.

Usage: python3 benchmarks/benchmark_kernels.py [--pulses N]
"""

import argparse
import time

import numpy as np

from twinbeam import DetectionChannel, ExperimentConfig, ModePartition, simulate
from twinbeam.sampler import available_backends, build_kernel_plan, chunk_uniforms


def _config(m, k, nbar, eta1, eta2, noise=0.0, bg=0.0):
    return ExperimentConfig(
        partition=ModePartition(m, k, k),
        mean_photons_per_mode=nbar,
        signal_channel=DetectionChannel(eta1, noise),
        idler_channel=DetectionChannel(eta2, noise),
        background_signal=bg,
        background_idler=bg,
    )


CASES = {
    "small lossless (tables only)": _config(50, 0, 1.0, 1.0, 1.0),
    "lossy small modes (exact binomial)": _config(50, 5, 1.0, 0.77, 0.70),
    "bright multimode (exact binomial, n~1300)": _config(100, 20, 13.15, 0.77, 0.70),
    "paper scale (Gaussian paths + noise)": _config(3750, 150, 13.15, 0.77, 0.70, noise=180.0),
    "very high gain (all Gaussian)": _config(3750, 150, 744.7, 0.77, 0.70, noise=180.0),
}


def time_kernel(kernel, plan, blocks, out1, out2):
    start = time.perf_counter()
    for u in blocks:
        kernel(plan, u, out1, out2)
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pulses", type=int, default=200_000)
    parser.add_argument("--chunk", type=int, default=4096)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")
    if "cython" not in backends:
        print("compiled kernel not built; timing the numpy fallback only")

    n_chunks = max(1, args.pulses // args.chunk)
    pulses = n_chunks * args.chunk
    header = f"{'case':45s} " + " ".join(f"{name + ' Mp/s':>14s}" for name in backends)
    if len(backends) == 2:
        header += f" {'speedup':>9s}"
    print(header)
    print("-" * len(header))

    for name, config in CASES.items():
        plan = build_kernel_plan(config)
        blocks = [chunk_uniforms(1234, i, args.chunk) for i in range(n_chunks)]
        out = {k: (np.empty(args.chunk), np.empty(args.chunk)) for k in backends}
        rates = {}
        for backend, kernel in backends.items():
            o1, o2 = out[backend]
            kernel(plan, blocks[0], o1, o2)  # warm up
            elapsed = time_kernel(kernel, plan, blocks, o1, o2)
            rates[backend] = pulses / elapsed / 1e6
        first = next(iter(backends))
        for backend in backends:
            a, b = out[first], out[backend]
            assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]), name
        line = f"{name:45s} " + " ".join(f"{rates[k]:14.3f}" for k in backends)
        if "cython" in rates and "python" in rates:
            line += f" {rates['cython'] / rates['python']:8.1f}x"
        print(line)

    config = CASES["bright multimode (exact binomial, n~1300)"]
    start = time.perf_counter()
    simulate(config, pulses, seed=1, workers=4)
    elapsed = time.perf_counter() - start
    print(f"\nend-to-end simulate ({pulses} pulses, 4 workers, active backend): "
          f"{elapsed:.3f} s ({pulses / elapsed / 1e6:.3f} Mpulses/s)")


if __name__ == "__main__":
    main()
