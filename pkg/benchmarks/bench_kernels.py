"""Time the compiled and pure-Python trace kernels on the same inputs.

    python benchmarks/bench_kernels.py [--n 100000] [--repeat 5]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from reliab import _pykernels

try:
    from reliab import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def cases(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    loss = rng.random(n) + 1.0
    r = rng.random(n)
    g = rng.random(n)
    conf = rng.random(n)
    corr = (rng.random(n) < conf).astype(np.float64)
    band = np.ones(n)
    band[: n // 2] = 3.0
    return {
        "rolling_variance": lambda k: k.rolling_variance(loss, 25),
        "first_sustained_in_band": lambda k: k.first_sustained_in_band(band, 0, 0.95, 1.05, 10),
        "ece_bins": lambda k: k.ece_bins(conf, corr, 15),
        "lyapunov_replay": lambda k: k.lyapunov_replay(loss, r, g, 1.0, 0.5, 1e-9),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"n={args.n}, best of {args.repeat}")
    print(f"{'kernel':26s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in cases(args.n).items():
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{name:26s} {t_py:10.2f} {'n/a':>10s} {'':>8s}")
            continue
        t_c = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:26s} {t_py:10.2f} {t_c:10.2f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
