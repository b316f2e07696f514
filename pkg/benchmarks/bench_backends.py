"""Benchmark the numba kernels against the pure-numpy fallback.

Times the LSTM layer passes at the final daily-model shape and the
periodogram DFT at several series lengths, printing per-backend timings
and the numba speedup. Run from the repository root:

    python benchmarks/bench_backends.py [--quick]
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

try:
    import cachescope  # noqa: F401
except ImportError:
    sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from cachescope.kernels import numpy_backend

try:
    from cachescope.kernels import numba_backend
except ImportError:
    numba_backend = None


def time_call(fn, *args, repeats=20):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_lstm(backend, L, B, D, H, repeats):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(L, B, D))
    wx = rng.normal(size=(D, 4 * H)) * 0.3
    wh = rng.normal(size=(H, 4 * H)) * 0.3
    b = rng.normal(size=4 * H) * 0.1
    out = backend.lstm_forward(x, wx, wh, b, 0)
    dh = rng.normal(size=(L, B, H))
    fwd = time_call(backend.lstm_forward, x, wx, wh, b, 0, repeats=repeats)
    bwd = time_call(
        backend.lstm_backward, x, wx, wh, out[1], out[2], out[3], out[4], out[5],
        out[0], dh, 0, repeats=repeats,
    )
    return fwd, bwd


def bench_dft(backend, n, repeats):
    x = np.sin(np.arange(n) * 0.37) + np.random.default_rng(1).normal(size=n)
    backend.dft_power(x)
    return time_call(backend.dft_power, x, repeats=repeats)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="fewer repeats, smaller sizes")
    args = parser.parse_args()
    repeats = 5 if args.quick else 20
    dft_sizes = (365, 1000) if args.quick else (365, 1000, 3000)

    backends = [("numpy", numpy_backend)]
    if numba_backend is not None:
        backends.append(("numba", numba_backend))
    else:
        print("numba not importable; benchmarking numpy only")

    results = {}
    L, B, D, H = 7, 32, 14, 128
    print(f"\nLSTM layer (L={L}, B={B}, D={D}, H={H}), best of {repeats}:")
    for name, backend in backends:
        fwd, bwd = bench_lstm(backend, L, B, D, H, repeats)
        results[name] = (fwd, bwd)
        print(f"  {name:>6}: forward {fwd * 1e3:7.3f} ms   backward {bwd * 1e3:7.3f} ms")
    if len(results) == 2:
        f_np, b_np = results["numpy"]
        f_nb, b_nb = results["numba"]
        print(f"  numba speedup: forward {f_np / f_nb:4.2f}x   backward {b_np / b_nb:4.2f}x")

    print(f"\nPeriodogram DFT, best of {repeats}:")
    for n in dft_sizes:
        row = []
        for name, backend in backends:
            row.append((name, bench_dft(backend, n, repeats)))
        line = "   ".join(f"{name} {t * 1e3:8.3f} ms" for name, t in row)
        extra = ""
        if len(row) == 2:
            extra = f"   numba speedup {row[0][1] / row[1][1]:5.2f}x"
        print(f"  N={n:5d}: {line}{extra}")

    if len(backends) == 2:
        rng = np.random.default_rng(7)
        x = rng.normal(size=(5, 4, 8))
        wx = rng.normal(size=(8, 16))
        wh = rng.normal(size=(4, 16))
        b = rng.normal(size=16)
        a = numpy_backend.lstm_forward(x, wx, wh, b, 0)
        c = numba_backend.lstm_forward(x, wx, wh, b, 0)
        worst = max(float(np.abs(u - v).max()) for u, v in zip(a, c))
        print(f"\nbackend agreement (lstm_forward, max abs diff): {worst:.2e}")


if __name__ == "__main__":
    main()
