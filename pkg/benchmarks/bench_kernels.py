"""Time the numba and numpy kernel backends on the two hot paths.

    python benchmarks/bench_kernels.py --M 1024 --N 128 --repeat 3
"""

import argparse
import math
import time
from dataclasses import replace

import numpy as np

from otfs_dse import channel, modem
from otfs_dse.config import FrameConfig, nu_max, required_k_max
from otfs_dse.kernels import HAVE_NUMBA, dse_columns, oracle_rows


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=int, default=512)
    ap.add_argument("--N", type=int, default=32)
    ap.add_argument("--paths", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    cfg = FrameConfig(f_c=4e9, delta_f=3e4, M=args.M, N=args.N, M_CP=24, l_max=20,
                      k_max=16, x_p=math.sqrt(1000))
    v = 1000 / 3.6
    cfg = replace(cfg, k_max=max(1, required_k_max(cfg, v)))
    rng = np.random.default_rng(args.seed)
    ch = channel.jakes_draw(cfg, v, args.paths, rng)
    ls, ks, betas = ch.arrays()
    _, _, S = modem.random_frame(cfg, rng)
    X = modem.samples_to_tf(S)
    cols = np.arange(cfg.M)
    rows = np.arange(cfg.num_symbols)
    print(f"M={cfg.M} N={cfg.N} paths={args.paths} nu_max={nu_max(cfg, v):.1f} Hz")

    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    jobs = {
        "dse_columns (one symbol)": lambda b: dse_columns(
            ls, ks, betas, cfg.N + 1, cols, cfg.M, cfg.M_CP, cfg.N, cfg.squint,
            cfg.inv_p_per_k, backend=b),
        "oracle_rows (full frame)": lambda b: oracle_rows(
            X, rows, ls, ks, betas, cfg.M, cfg.M_CP, cfg.N, cfg.inv_p_per_k, backend=b),
    }
    for name, job in jobs.items():
        results = {}
        for b in backends:
            job(b)  # warm-up, includes numba compilation
            results[b] = best_of(lambda: job(b), args.repeat)
        line = "  ".join(f"{b} {t * 1e3:9.2f} ms" for b, t in results.items())
        if len(results) == 2:
            line += f"  speed-up x{results['numpy'] / results['numba']:.1f}"
        print(f"{name:26s} {line}")
        if len(results) == 2:
            a, c = job("numpy"), job("numba")
            print(f"{'':26s} max |numpy - numba| = {np.abs(a - c).max():.2e}")


if __name__ == "__main__":
    main()
