"""Numba versus numpy kernels, and end-to-end pipeline time on each path.

    python benchmarks/bench_kernels.py [--width 1024] [--repeat 5]

Kernel timings call both implementations in-process. The pipeline timing
runs once per path in a subprocess, since the path is fixed at import time
by PANOFLOW_DISABLE_NUMBA.
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np
from scipy.ndimage import gaussian_filter

from panoflow import kernels


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(W, rng):
    H = W // 2
    img = rng.random((H, W, 3))
    u = rng.uniform(0, W, H * W)
    v = rng.uniform(0, H - 1, H * W)

    n = W // 2
    I0 = gaussian_filter(rng.random((n, n)), 1.5)
    I1 = np.roll(I0, (1, 2), axis=(0, 1))
    gy, gx = np.gradient(I0)
    ys = np.arange(0, n - 8 + 1, 4)
    py, px = (a.ravel().astype(np.int64) for a in np.meshgrid(ys, ys, indexing="ij"))
    init = np.zeros((px.size, 2))
    valid = np.ones(px.size, dtype=bool)
    uv, resid = kernels.numpy_impl.inverse_search(I0, gx, gy, I1, px, py, init, valid, 8, 16, 0.01)
    weight = 1.0 / np.maximum(1e-3, resid)

    return {
        f"bilinear_wrap {W}x{H}x3": lambda m: m.bilinear_wrap(img, u, v),
        f"bilinear_clamp {W}x{H}x3": lambda m: m.bilinear_clamp(img, u, v),
        f"inverse_search {n}x{n}, {px.size} patches": lambda m: m.inverse_search(
            I0, gx, gy, I1, px, py, init, valid, 8, 16, 0.01),
        f"densify {n}x{n}": lambda m: m.densify(px, py, uv, weight, 8, n, n),
    }


PIPELINE_SNIPPET = """
import json, time
from panoflow import kernels, pipeline, synth
scene = synth.SceneSpec("box_room", seed=5)
p0, p1 = synth.camera_path("circle", scene, n=2)
a, b = synth.render_erp(scene, p0, {W}), synth.render_erp(scene, p1, {W})
pipeline.run(a, b)  # warm-up
t0 = time.perf_counter()
pipeline.run(a, b)
print(json.dumps({{"path": kernels.BACKEND_NAME, "seconds": time.perf_counter() - t0}}))
"""


def pipeline_time(W, disable):
    env = dict(os.environ)
    if disable:
        env["PANOFLOW_DISABLE_NUMBA"] = "1"
    else:
        env.pop("PANOFLOW_DISABLE_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", PIPELINE_SNIPPET.format(W=W)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--width", type=int, default=1024)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-pipeline", action="store_true")
    args = ap.parse_args(argv)
    if kernels.numba_impl is None:
        sys.exit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<42} {'numpy ms':>10} {'numba ms':>10} {'speed-up':>9}")
    for name, call in kernel_cases(args.width, rng).items():
        t_np = best_of(lambda: call(kernels.numpy_impl), args.repeat)
        t_nb = best_of(lambda: call(kernels.numba_impl), args.repeat)
        print(f"{name:<42} {t_np * 1e3:>10.2f} {t_nb * 1e3:>10.2f} {t_np / t_nb:>8.1f}x")

    if not args.skip_pipeline:
        print()
        rows = [pipeline_time(args.width, disable) for disable in (True, False)]
        for r in rows:
            print(f"pipeline {args.width}x{args.width // 2} on {r['path']:<6} {r['seconds']:>8.2f} s")
        print(f"pipeline speed-up {rows[0]['seconds'] / rows[1]['seconds']:.1f}x")


if __name__ == "__main__":
    main()
