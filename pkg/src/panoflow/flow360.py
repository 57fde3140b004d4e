"""360-degree flow fields on the ERP grid.

A flow field is an (H, W, 2) array of (du, dv) pixel displacements. ``du``
follows the shortest path around the sphere, so it always lies in
[-W/2, W/2); ``dv`` never wraps.
"""
import numpy as np

from .erp import check_erp, pix_to_vec, pixel_dirs, pixel_grid, sample_bilinear, vec_to_pix
from .errors import DimensionError
from .sphere import rotate


def wrap_normalize(du, W):
    """Reduce horizontal displacements into [-W/2, W/2)."""
    return np.mod(np.asarray(du, dtype=np.float64) + W / 2.0, W) - W / 2.0


def clamp_rows(v, H):
    """Clamp row coordinates to the pole rows' outer edges [-0.5, H - 0.5]."""
    return np.clip(v, -0.5, H - 0.5)


def check_flow(f, W=None, H=None, name="flow"):
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 3 or f.shape[2] != 2:
        raise DimensionError(f"{name}: expected (H, W, 2), got {f.shape}")
    if W is not None and f.shape[:2] != (H, W):
        raise DimensionError(f"{name}: {f.shape[1]}x{f.shape[0]} does not match {W}x{H}")
    return f


def endpoint(f, u=None, v=None):
    """Endpoint pixel coordinates of ``f`` at (u, v) (default: whole grid).

    The column is reduced into [0, W); the row is clamped to [-0.5, H-0.5].
    """
    f = check_flow(f)
    H, W = f.shape[:2]
    if u is None:
        u, v = pixel_grid(W, H)
        du, dv = f[..., 0], f[..., 1]
    else:
        ui = np.asarray(u).astype(np.int64) % W
        vi = np.clip(np.asarray(v).astype(np.int64), 0, H - 1)
        du, dv = f[vi, ui, 0], f[vi, ui, 1]
    return np.mod(u + du, W), clamp_rows(v + dv, H)


def flow_from_endpoints(u0, v0, u1, v1, W, H):
    """Flow field from start and end pixel coordinates (congruent grids)."""
    du = wrap_normalize(np.asarray(u1) - np.asarray(u0), W)
    dv = clamp_rows(np.asarray(v1, dtype=np.float64), H) - v0
    return np.stack([du, dv], axis=-1)


def flow_from_end_dirs(end_dirs):
    """Flow on the full grid whose endpoints are the given unit vectors (H, W, 3)."""
    H, W = end_dirs.shape[:2]
    u0, v0 = pixel_grid(W, H)
    u1, v1 = vec_to_pix(end_dirs, W, H)
    return flow_from_endpoints(u0, v0, u1, v1, W, H)


def endpoint_dirs(f):
    """Unit vectors of every endpoint, (H, W, 3)."""
    H, W = f.shape[:2]
    return pix_to_vec(*endpoint(f), W, H)


def flow_from_rotation(R, W, H):
    """Analytic flow of a global rotation: each direction d moves to R d."""
    return flow_from_end_dirs(rotate(R, pixel_dirs(W, H)))


def from_raster_flow(raw):
    """Turn a planar backend result computed on the ERP raster into a
    wrap-normalised 360 flow field."""
    raw = check_flow(raw)
    H, W = raw.shape[:2]
    u0, v0 = pixel_grid(W, H)
    return flow_from_endpoints(u0, v0, u0 + raw[..., 0], v0 + raw[..., 1], W, H)


def backward_warp(img, f):
    """``out(x) = img(endpoint(f, x))`` with wrap-aware bilinear sampling."""
    img = check_erp(img)
    H, W = img.shape[:2]
    f = check_flow(f, W, H)
    return sample_bilinear(img, *endpoint(f))
