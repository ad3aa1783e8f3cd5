"""Timing comparison of the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Each benchmark runs both implementations on identical inputs, checks the
outputs are bit-identical, and reports median wall time plus speedup.
"""
import argparse
import time

import numpy as np

from stylebake._kernels import pyfallback
from stylebake.rng import SeededRng

try:
    from stylebake._kernels import _ext
except ImportError:
    _ext = None


def _median_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return sorted(times)[len(times) // 2]


def bench_conv(mod):
    r = SeededRng(0, "bench-conv")
    padded = np.ascontiguousarray(r.normal((64, 130, 130)))
    weights = np.ascontiguousarray(r.normal((128, 64, 3, 3)))
    out = np.zeros((128, 128, 128))

    def run():
        out.fill(0.0)
        mod.conv3x3_acc(out, padded, weights)
        return out
    return run


def bench_raster(mod):
    r = SeededRng(1, "bench-raster")
    t = 2000
    xy = np.ascontiguousarray(np.asarray(r.uniform((t, 3, 2))) * 512 * 1.05 - 12)
    z = np.ascontiguousarray(0.1 + np.asarray(r.uniform((t, 3))) * 1.8)

    def run():
        depth = np.full((512, 512), np.inf)
        tri = np.full((512, 512), -1, dtype=np.int32)
        b0 = np.zeros((512, 512))
        b1 = np.zeros((512, 512))
        b2 = np.zeros((512, 512))
        mod.raster_tris(xy, z, 512, 512, 0.05, 2.0, depth, tri, b0, b1, b2)
        return depth, tri, b0, b1, b2
    return run


def bench_reproject(mod):
    r = SeededRng(2, "bench-reproj")
    h = w = 512
    color = np.ascontiguousarray(np.asarray(r.uniform((3, h, w))))
    vdepth = np.ascontiguousarray(0.3 + np.asarray(r.uniform((h, w))) * 0.5)
    n = 1_000_000
    px = np.asarray(r.uniform(n)) * w
    py = np.asarray(r.uniform(n)) * h
    dep = 0.3 + np.asarray(r.uniform(n)) * 0.5
    weight = np.asarray(r.uniform(n))

    def run():
        ac = np.zeros((n, 3))
        aw = np.zeros(n)
        ob = np.zeros(n, dtype=np.int32)
        mod.reproject_accum(color, vdepth, 1.99, 1e-3, 0.05,
                            px, py, dep, weight, ac, aw, ob)
        return ac, aw, ob
    return run


def bench_knn(mod):
    r = SeededRng(3, "bench-knn")
    vp = np.ascontiguousarray(np.asarray(r.uniform((20_000, 3))) - 0.5)
    vc = np.ascontiguousarray(np.asarray(r.uniform((20_000, 3))))
    tg = np.ascontiguousarray(np.asarray(r.uniform((5_000, 3))) - 0.5)

    def run():
        return mod.knn_fill(tg, vp, vc, 4, 1.0 / 32)
    return run


BENCHES = [
    ("conv3x3 128ch@128^2", bench_conv),
    ("raster 2000tri@512^2", bench_raster),
    ("reproject 1M texels", bench_reproject),
    ("knn_fill 5k from 20k", bench_knn),
]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if _ext is None:
        print("compiled extension not built; run `python setup.py build_ext --inplace`")
    print(f"{'kernel':<24}{'python':>12}{'compiled':>12}{'speedup':>10}  identical")
    for name, factory in BENCHES:
        py_run = factory(pyfallback)
        t_py = _median_time(py_run, args.repeat)
        if _ext is None:
            print(f"{name:<24}{t_py * 1e3:>10.1f}ms{'-':>12}{'-':>10}")
            continue
        ext_run = factory(_ext)
        t_ext = _median_time(ext_run, args.repeat)
        ref = py_run()
        got = ext_run()
        if isinstance(ref, tuple):
            same = all(np.array_equal(a, b) for a, b in zip(ref, got))
        else:
            same = np.array_equal(ref, got)
        print(f"{name:<24}{t_py * 1e3:>10.1f}ms{t_ext * 1e3:>10.1f}ms"
              f"{t_py / t_ext:>9.1f}x  {same}")


if __name__ == "__main__":
    main()
