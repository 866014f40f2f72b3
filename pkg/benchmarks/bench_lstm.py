"""Compare the compiled and pure-numpy LSTM kernels.

Runs identical forward/backward passes through both backends and prints
wall-clock timings plus the max elementwise divergence. Usage:

    python benchmarks/bench_lstm.py [--hidden 32] [--steps 200] [--reps 20]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from skyoff.forecast import kernels
from skyoff.forecast.model import init_model


def _args(model):
    return model.wx, model.wh, model.b, model.wy, model.by


def bench(backend_mod, name: str, model, xs, reps: int) -> tuple[float, float, tuple]:
    fwd = backend_mod.sequence_forward
    bwd = backend_mod.sequence_backward
    # warm up and keep one result for the divergence check
    ys, cache = fwd(*_args(model), xs)
    dys = np.ones_like(np.asarray(ys)) / len(xs)
    grads = bwd(*_args(model), cache, dys)
    t0 = time.perf_counter()
    for _ in range(reps):
        ys, cache = fwd(*_args(model), xs)
        bwd(*_args(model), cache, dys)
    elapsed = (time.perf_counter() - t0) / reps
    print(f"{name:>6}: {elapsed * 1e3:8.3f} ms per forward+backward")
    return elapsed, ys, grads


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--hidden", type=int, default=32)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = kernels.available_backends()
    print(f"available backends: {', '.join(backends)}")
    model = init_model(args.hidden, args.seed)
    rng = np.random.default_rng(args.seed + 1)
    xs = rng.uniform(0.0, 1.0, size=args.steps)

    results = {}
    for name in backends:
        mod = kernels.backend_module(name)
        results[name] = bench(mod, name, model, xs, args.reps)

    if len(results) == 2:
        (_, ys_a, g_a), (_, ys_b, g_b) = results["cy"], results["py"]
        dy = np.max(np.abs(np.asarray(ys_a) - np.asarray(ys_b)))
        dg = max(
            np.max(np.abs(np.asarray(x) - np.asarray(y))) for x, y in zip(g_a, g_b)
        )
        print(f"max |y_cy - y_py|    = {dy:.3e}")
        print(f"max |grad divergence| = {dg:.3e}")
        speedup = results["py"][0] / results["cy"][0]
        print(f"speedup cy over py    = {speedup:.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
