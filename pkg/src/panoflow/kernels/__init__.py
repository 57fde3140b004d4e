"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The active implementation is chosen once at import time from
:data:`panoflow._jit.USE_NUMBA`; both remain importable for testing and
benchmarking as ``kernels.numpy_impl`` and ``kernels.numba_impl``.
"""
import numpy as np

from .. import _jit
from . import _numpy as numpy_impl

if _jit.HAVE_NUMBA:
    from . import _numba as numba_impl
else:  # pragma: no cover
    numba_impl = None

active = numba_impl if _jit.USE_NUMBA else numpy_impl
BACKEND_NAME = "numba" if _jit.USE_NUMBA else "numpy"


def _as3(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    return np.ascontiguousarray(img)


def bilinear_wrap(img, u, v):
    """Sample an (H, W[, C]) raster at continuous (u, v); u wraps, v clamps."""
    img3 = _as3(img)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    shape = np.broadcast_shapes(u.shape, v.shape)
    u, v = np.broadcast_to(u, shape).ravel(), np.broadcast_to(v, shape).ravel()
    out = active.bilinear_wrap(img3, np.ascontiguousarray(u), np.ascontiguousarray(v))
    return out.reshape(shape + img3.shape[2:]) if np.ndim(img) == 3 else out[:, 0].reshape(shape)


def bilinear_clamp(img, x, y):
    """Sample an (H, W[, C]) raster at continuous (x, y) with edge clamping."""
    img3 = _as3(img)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    shape = np.broadcast_shapes(x.shape, y.shape)
    x = np.ascontiguousarray(np.broadcast_to(x, shape).ravel())
    y = np.ascontiguousarray(np.broadcast_to(y, shape).ravel())
    out = active.bilinear_clamp(img3, x, y)
    return out.reshape(shape + img3.shape[2:]) if np.ndim(img) == 3 else out[:, 0].reshape(shape)


def inverse_search(I0, gx, gy, I1, px, py, init, valid, patch_size, max_iters, eps):
    return active.inverse_search(
        np.ascontiguousarray(I0, dtype=np.float64),
        np.ascontiguousarray(gx, dtype=np.float64),
        np.ascontiguousarray(gy, dtype=np.float64),
        np.ascontiguousarray(I1, dtype=np.float64),
        np.ascontiguousarray(px, dtype=np.int64),
        np.ascontiguousarray(py, dtype=np.int64),
        np.ascontiguousarray(init, dtype=np.float64),
        np.ascontiguousarray(valid, dtype=np.bool_),
        int(patch_size),
        int(max_iters),
        float(eps),
    )


def densify(px, py, uv, weight, patch_size, H, W):
    return active.densify(
        np.ascontiguousarray(px, dtype=np.int64),
        np.ascontiguousarray(py, dtype=np.int64),
        np.ascontiguousarray(uv, dtype=np.float64),
        np.ascontiguousarray(weight, dtype=np.float64),
        int(patch_size),
        int(H),
        int(W),
    )
