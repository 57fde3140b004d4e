"""The numba kernels and the numpy fallback must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from panoflow import _jit, kernels

pytestmark = pytest.mark.skipif(kernels.numba_impl is None, reason="numba not installed")


def test_bilinear_equivalence(rng):
    img = rng.random((20, 40, 3))
    u = rng.uniform(-50, 90, 2000)
    v = rng.uniform(-3, 23, 2000)
    a = kernels.numpy_impl.bilinear_wrap(img, u, v)
    b = kernels.numba_impl.bilinear_wrap(img, u, v)
    np.testing.assert_allclose(a, b, atol=1e-14)
    a = kernels.numpy_impl.bilinear_clamp(img, u, v)
    b = kernels.numba_impl.bilinear_clamp(img, u, v)
    np.testing.assert_allclose(a, b, atol=1e-14)


def _search_inputs(rng, n=64):
    from scipy.ndimage import gaussian_filter

    I0 = gaussian_filter(rng.random((n, n)), 1.5)
    I1 = np.roll(I0, (1, 2), axis=(0, 1))
    gy, gx = np.gradient(I0)
    ys = np.arange(0, n - 8 + 1, 4)
    py, px = (a.ravel() for a in np.meshgrid(ys, ys, indexing="ij"))
    init = rng.normal(0.0, 0.5, (px.size, 2))
    valid = rng.random(px.size) > 0.1
    return I0, gx, gy, I1, px.astype(np.int64), py.astype(np.int64), init, valid


def test_inverse_search_equivalence(rng):
    args = _search_inputs(rng)
    uv_a, r_a = kernels.numpy_impl.inverse_search(*args, 8, 16, 0.01)
    uv_b, r_b = kernels.numba_impl.inverse_search(*args, 8, 16, 0.01)
    np.testing.assert_allclose(uv_a, uv_b, atol=1e-10)
    np.testing.assert_allclose(r_a, r_b, atol=1e-10)


def test_inverse_search_recovers_shift(rng):
    I0, gx, gy, I1, px, py, init, valid = _search_inputs(rng)
    uv, _ = kernels.inverse_search(I0, gx, gy, I1, px, py, np.zeros_like(init), np.ones_like(valid), 8, 30, 1e-4)
    interior = (px >= 8) & (px <= 48) & (py >= 8) & (py <= 48)
    np.testing.assert_allclose(np.median(uv[interior], axis=0), [2.0, 1.0], atol=0.05)


def test_densify_equivalence(rng):
    px = rng.integers(0, 24, 50)
    py = rng.integers(0, 24, 50)
    uv = rng.normal(size=(50, 2))
    w = rng.random(50)
    a = kernels.numpy_impl.densify(px, py, uv, w, 8, 32, 32)
    b = kernels.numba_impl.densify(px, py, uv, w, 8, 32, 32)
    np.testing.assert_allclose(a[0], b[0], atol=1e-12)
    np.testing.assert_allclose(a[1], b[1], atol=1e-12)


def test_wrappers_keep_shapes(rng):
    img = rng.random((8, 16))
    assert kernels.bilinear_wrap(img, 3.5, 2.0).shape == ()
    assert kernels.bilinear_wrap(img[..., None].repeat(3, 2), np.zeros((4, 5)), 1.0).shape == (4, 5, 3)
    assert kernels.bilinear_clamp(img, np.zeros(7), np.zeros(7)).shape == (7,)


def test_env_flag_selects_numpy():
    code = "from panoflow import kernels, _jit; print(kernels.BACKEND_NAME, _jit.DISABLED_BY_ENV)"
    env = dict(os.environ, PANOFLOW_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "True"]


def test_default_backend_is_numba():
    if _jit.DISABLED_BY_ENV:
        pytest.skip("numba disabled in this environment")
    assert kernels.BACKEND_NAME == "numba"


def test_pipeline_paths_agree(tmp_path):
    code = (
        "import sys, numpy as np\n"
        "from panoflow import pipeline, synth\n"
        "s = synth.SceneSpec('sphere_texture', seed=1)\n"
        "a = synth.render_erp(s, synth.rotation_pose(), 128)\n"
        "b = synth.render_erp(s, synth.rotation_pose(0.1, 0.05), 128)\n"
        "np.save(sys.argv[1], pipeline.run(a, b)[0])\n"
    )
    flows = []
    for flag in ("0", "1"):
        out = tmp_path / f"flow{flag}.npy"
        env = dict(os.environ, PANOFLOW_DISABLE_NUMBA=flag)
        subprocess.run([sys.executable, "-c", code, str(out)], env=env, check=True, capture_output=True)
        flows.append(np.load(out))
    np.testing.assert_allclose(flows[0], flows[1], atol=1e-8)
