"""Benchmark the compiled chain kernels against the pure-numpy fallback.

Times the three sweeps on identical inputs at several chain lengths and
checks that both backends agree, then times a full segmentation once per
backend.  Run from the repository root:

    python benchmarks/compare_backends.py
"""

import time

import numpy as np

from peanoseg import _kernels_py

try:
    from peanoseg import _kernels as compiled
except ImportError:
    compiled = None


def timed(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_sweeps():
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'N':>9}{'M':>4}{'python':>12}{'cython':>12}{'speedup':>9}")
    for n, m in ((4_096, 2), (65_536, 2), (65_536, 4), (262_144, 2)):
        phi = np.ascontiguousarray(rng.random((n - 1, m, m)) + 0.01)
        initial = np.full(m, 1.0 / m)
        t_py, (beta_py, scale_py, _) = timed(_kernels_py.backward_sweep, phi)
        row = f"{'backward':<16}{n:>9}{m:>4}{t_py * 1e3:>10.2f}ms"
        trans = phi * beta_py[1:, None, :]
        trans /= trans.sum(axis=2, keepdims=True)
        trans = np.ascontiguousarray(trans)
        uniforms = rng.random(n)
        if compiled is not None:
            t_cy, (beta_cy, scale_cy, _) = timed(compiled.backward_sweep, phi)
            assert np.allclose(beta_cy, beta_py, rtol=1e-12)
            assert np.allclose(scale_cy, scale_py, rtol=1e-12)
            row += f"{t_cy * 1e3:>10.2f}ms{t_py / t_cy:>8.1f}x"
        print(row)
        t_py, marg_py = timed(_kernels_py.forward_sweep, initial, trans)
        row = f"{'forward':<16}{n:>9}{m:>4}{t_py * 1e3:>10.2f}ms"
        if compiled is not None:
            t_cy, marg_cy = timed(compiled.forward_sweep, initial, trans)
            assert np.allclose(marg_cy, marg_py, rtol=1e-12)
            row += f"{t_cy * 1e3:>10.2f}ms{t_py / t_cy:>8.1f}x"
        print(row)
        t_py, path_py = timed(_kernels_py.sample_sweep, initial, trans, uniforms)
        row = f"{'sample':<16}{n:>9}{m:>4}{t_py * 1e3:>10.2f}ms"
        if compiled is not None:
            t_cy, path_cy = timed(compiled.sample_sweep, initial, trans, uniforms)
            assert np.array_equal(path_cy, path_py)
            row += f"{t_cy * 1e3:>10.2f}ms{t_py / t_cy:>8.1f}x"
        print(row)


def bench_segmentation():
    import peanoseg._backend as backend
    from peanoseg.cli import segment_observed
    from peanoseg.estimation import SemConfig
    from peanoseg.imaging import blocks_and_stripes, synth_noise

    truth = blocks_and_stripes(7, stripe_width=3)
    obs = synth_noise(truth, [0.0, 1.0], [1.0, 1.0], seed=0)
    config = SemConfig(max_iters=30, tol=0.0, seed=0)
    print()
    modules = [("python", _kernels_py)]
    if compiled is not None:
        modules.append(("cython", compiled))
    for name, module in modules:
        backend.kernels = module
        segment_observed(obs, "hmc-cps", 2, config)  # warm
        t0 = time.perf_counter()
        segment_observed(obs, "hmc-cps", 2, config)
        print(f"128x128 hmc-cps, 30 SEM iterations, {name:<7}"
              f"{time.perf_counter() - t0:8.2f} s")


if __name__ == "__main__":
    if compiled is None:
        print("compiled kernels unavailable; timing the fallback only\n")
    bench_sweeps()
    bench_segmentation()
