#!/usr/bin/env python3
"""Benchmark the compiled encoder kernels against the NumPy fallback.

Times the forward and backward passes at training-realistic shapes, then a
short end-to-end training run per backend. Run after ``pip install -e .``:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from dyconfid.kernels import numpy_backend

try:
    from dyconfid.kernels import _speedups
except ImportError:
    _speedups = None


def time_fn(fn, *args, repeat=30):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def bench_kernels(batch=432, n=64, h=32):
    rng = np.random.default_rng(0)
    pts = np.ascontiguousarray(rng.normal(size=(batch, n, 3)))
    w1 = rng.normal(size=(3, h))
    b1 = rng.normal(size=h)
    w2 = rng.normal(size=(h, h))
    b2 = rng.normal(size=h)

    backends = [("numpy", numpy_backend)]
    if _speedups is not None:
        backends.append(("compiled", _speedups))

    print(f"kernel timings at batch={batch}, N={n}, H={h} (mean of 30 calls)")
    results = {}
    for name, impl in backends:
        fwd = time_fn(impl.encoder_forward, pts, w1, b1, w2, b2)
        pooled, a1, argmax = impl.encoder_forward(pts, w1, b1, w2, b2)
        dp = np.ascontiguousarray(rng.normal(size=pooled.shape))
        bwd = time_fn(impl.encoder_backward, pts, a1, argmax, pooled, w1, w2, dp)
        results[name] = (fwd, bwd)
        print(f"  {name:9s} forward {fwd * 1e3:7.2f} ms   backward {bwd * 1e3:7.2f} ms")
    if len(results) == 2:
        f_np, b_np = results["numpy"]
        f_c, b_c = results["compiled"]
        print(f"  speedup   forward {f_np / f_c:6.2f} x    backward {b_np / b_c:6.2f} x")


def bench_training(epochs=20):
    import importlib
    import os

    from dyconfid import data, harness
    from dyconfid.core import RunConfig

    cfg = harness.ExperimentConfig(
        run=RunConfig(E_max=epochs), dataset=data.default_spec(),
        method="dyconfid", seeds=(0,), out_dir="/tmp/dyconfid_bench")

    import dyconfid.kernels as kmod
    import dyconfid.model as mmod

    timings = {}
    modes = [("numpy", "1")] + ([("compiled", "")] if _speedups is not None else [])
    for name, env in modes:
        if env:
            os.environ["DYCONFID_PURE_PYTHON"] = env
        else:
            os.environ.pop("DYCONFID_PURE_PYTHON", None)
        importlib.reload(kmod)
        importlib.reload(mmod)
        t0 = time.perf_counter()
        harness.run_experiment(cfg, 0)
        timings[name] = time.perf_counter() - t0
        print(f"  {name:9s} {epochs}-epoch default-benchmark run: {timings[name]:6.2f} s")
    os.environ.pop("DYCONFID_PURE_PYTHON", None)
    importlib.reload(kmod)
    importlib.reload(mmod)
    if len(timings) == 2:
        print(f"  speedup   end-to-end {timings['numpy'] / timings['compiled']:.2f} x")


if __name__ == "__main__":
    if _speedups is None:
        print("compiled extension not available; timing the NumPy fallback only")
    bench_kernels()
    print()
    print(f"end-to-end training comparison")
    bench_training()
