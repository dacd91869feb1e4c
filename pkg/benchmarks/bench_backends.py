#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Measures the raw kernels and an end-to-end simulator run of the matmul
workload under each backend. Run from the repository root:

    python3 benchmarks/bench_backends.py
"""

import random
import struct
import sys
import time

from xshark._kernels import pyfallback

try:
    from xshark._kernels import _native
except ImportError:
    _native = None


def bench_kernel(mod, reps=20_000):
    r = random.Random(1)
    buf = bytearray(struct.pack("<768f", *[r.uniform(-4, 4) for _ in range(768)]))
    t0 = time.perf_counter()
    for _ in range(reps):
        mod.mxu_mm(buf, 0, 1024, 2048)
    mxu = (time.perf_counter() - t0) / reps
    t0 = time.perf_counter()
    for _ in range(reps):
        mod.v_add(buf, 0, 64, 128)
    vadd = (time.perf_counter() - t0) / reps
    return mxu, vadd


def bench_end_to_end(backend_mod):
    import xshark._kernels as sel
    import xshark.sim as sim_mod
    # route the simulator through the chosen backend
    saved = sel.kernels
    sel.kernels = backend_mod
    sim_mod._kernels.v_add = backend_mod.v_add
    sim_mod._kernels.v_mul = backend_mod.v_mul
    sim_mod._kernels.mxu_mm = backend_mod.mxu_mm
    try:
        from xshark.sim import SimConfig, run_program
        from xshark.workloads import apply_images, assemble, gen_starvation_kernel

        config = SimConfig()
        kernel = assemble(gen_starvation_kernel(tiles=32, prefetch_depth=4))
        t0 = time.perf_counter()
        reps = 20
        for _ in range(reps):
            state = config.make_state()
            apply_images(kernel, state)
            result = run_program(kernel.program, config, state)
            assert result.outcome == "halted"
        return (time.perf_counter() - t0) / reps
    finally:
        sel.kernels = saved
        sim_mod._kernels.v_add = saved.v_add
        sim_mod._kernels.v_mul = saved.v_mul
        sim_mod._kernels.mxu_mm = saved.mxu_mm


def main():
    rows = [("python", pyfallback)]
    if _native is not None:
        rows.append(("native", _native))
    else:
        print("compiled backend not built; showing fallback only",
              file=sys.stderr)
    print(f"{'backend':8s} {'mxu_mm':>12s} {'v_add':>12s} {'sim run':>12s}")
    base = None
    for name, mod in rows:
        mxu, vadd = bench_kernel(mod)
        e2e = bench_end_to_end(mod)
        if base is None:
            base = (mxu, vadd, e2e)
        print(f"{name:8s} {mxu * 1e6:10.2f}us {vadd * 1e6:10.2f}us "
              f"{e2e * 1e3:10.2f}ms  (x{base[0] / mxu:.1f}, x{base[1] / vadd:.1f}, "
              f"x{base[2] / e2e:.2f})")


if __name__ == "__main__":
    main()
