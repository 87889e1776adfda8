"""Compare the compiled and pure-Python loop kernels.

Usage: python benchmarks/bench_kernels.py [--symbols N] [--repeat R]
"""
import argparse
import time

import numpy as np

from blindrx.loops import available_backends
from blindrx.receiver import LoopConfig, gardner_gain, loop_gains
from blindrx.timing import matched_filter
from blindrx.waveform import PulseShape, synth_linear, ModClass


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--symbols", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    cfg = LoopConfig()
    x = synth_linear(ModClass.PSK2, args.symbols, PulseShape(), seed=1)
    r = matched_filter(x, PulseShape.receive()).samples
    gk1, gk2 = loop_gains(cfg.gardner_bw, cfg.damping, gardner_gain(cfg.rolloff, 8))
    ck1, ck2 = loop_gains(cfg.costas_bw, cfg.damping, 1.0)
    d = r[::8]

    backends = available_backends()
    results = {}
    for name, mod in backends.items():
        g = _best(lambda: mod.gardner_core(r, 8.0, gk1, gk2, 8.0), args.repeat)
        c = _best(lambda: mod.costas_core(d, ck1, ck2), args.repeat)
        results[name] = (g, c)
        print(f"{name:>7}: gardner {g * 1e3:9.2f} ms   costas {c * 1e3:9.2f} ms   "
              f"({args.symbols} symbols)")
    if len(results) == 2:
        (gp, cp), (gc, cc) = results["python"], results["cython"]
        print(f"speedup: gardner x{gp / gc:.1f}   costas x{cp / cc:.1f}")
        same = all(np.allclose(a, b, rtol=0, atol=1e-9) for a, b in
                   zip(backends["python"].gardner_core(r, 8.0, gk1, gk2, 8.0),
                       backends["cython"].gardner_core(r, 8.0, gk1, gk2, 8.0)))
        print(f"outputs agree: {same}")
    else:
        print("compiled backend not built; only the Python reference was timed")


if __name__ == "__main__":
    main()
